"""Config-driven command line: training runs, bias simulations, and the
study protocols (corruption, sensitivity, annealing, representation,
multi-task, higher moments, gradient-norm traces).

Commands read a JSON config (defaults below), apply flag overrides, and
write per-epoch metrics as JSON lines plus sweep tables as CSV. Every
output is reproducible from the echoed config and seed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from . import analysis
from .data import Dataset, load_csv, make_synthetic, split, standardize
from .grid import PaddingSpec, build_bin_grid
from .net import MlpModel, save_model
from .targets import TargetSpec
from .trainer import (
    AnnealSpec,
    MetricsRecord,
    TrainConfig,
    fit,
    grad_norm_trace,
    head_layout,
)

__all__ = ["ConfigError", "load_config", "cmd_train", "cmd_bias_sim", "cmd_study", "main"]

ENV_OUT_DIR = "HISTLOSS_OUT_DIR"

STUDY_KINDS = ("corrupt", "sensitivity", "anneal", "representation",
               "multitask", "moments", "gradnorm")

DEFAULT_CONFIG: dict = {
    "dataset": {
        "kind": "synthetic",
        "synthetic": {"kind": "sine", "n": 2000, "d": 1, "noise_std": 0.05, "seed": 1},
        "csv": {"path": None, "has_header": False, "target_column": "last"},
        "test_fraction": 0.2,
    },
    "model": {"hidden": [32, 32], "input_dropout": 0.0, "head_bias": True},
    "train": {
        "loss": "hl",
        "epochs": 100,
        "batch_size": 256,
        "learning_rate": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "adam_eps": 1e-7,
        "bins": 100,
        "sigma_w": 2.0,
        "psi_sigma": 3.0,
        "target_kind": "gaussian",
        "target_sigma": None,
        "epsilon": None,
        "normalize_targets": True,
        "target_noise_std": 0.0,
        "clip_threshold": None,
        "anneal": None,
        "multitask_coeff": 1.0,
        "moments": 2,
        "strict_targets": True,
    },
    "study": {
        "losses": ["l2", "hl"],
        "corrupt_ratios": [0.0, 0.1, 0.2],
        "multitask_coeffs": [0.0, 0.1, 1.0],
        "moments_list": [1, 2, 3],
        "sigma_final_ws": [1.0, 2.0],
        "epochs": None,
    },
    "runs": 1,
    "seed": 0,
    "out_dir": None,
}

_ANNEAL_KEYS = {"sigma_start_w", "sigma_final_w", "fraction"}


class ConfigError(ValueError):
    pass


def _check_keys(user, default, path: str = "") -> None:
    if not isinstance(user, dict):
        raise ConfigError(f"config section {path or '<root>'} must be an object")
    for key, value in user.items():
        here = f"{path}.{key}" if path else key
        if key == "anneal" and path == "train":
            if value is not None:
                if not isinstance(value, dict):
                    raise ConfigError(f"{here} must be null or an object")
                unknown = set(value) - _ANNEAL_KEYS
                if unknown:
                    raise ConfigError(f"unknown config key(s) {sorted(unknown)} in {here}")
            continue
        if key not in default:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(default[key], dict):
            _check_keys(value, default[key], here)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the config file, then flag overrides; unknown keys
    are rejected before any work happens."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        _check_keys(user, DEFAULT_CONFIG)
        cfg = _merge(cfg, user)
    if overrides:
        _check_keys(overrides, DEFAULT_CONFIG)
        cfg = _merge(cfg, overrides)
    return cfg


def _build_dataset(cfg: dict, run_seed: int) -> Dataset:
    d = cfg["dataset"]
    if d["kind"] == "synthetic":
        s = d["synthetic"]
        ds = make_synthetic(s["kind"], s["n"], s["d"], s["noise_std"], s["seed"])
    elif d["kind"] == "csv":
        c = d["csv"]
        if not c["path"]:
            raise ConfigError("dataset.csv.path is required for csv datasets")
        ds = load_csv(c["path"], has_header=c["has_header"], target_column=c["target_column"])
    else:
        raise ConfigError(f"unknown dataset kind {d['kind']!r}")
    ds = split(ds, d["test_fraction"], seed=run_seed)
    return standardize(ds)


def _target_spec(t: dict) -> TargetSpec:
    kind = t["target_kind"]
    if kind == "gaussian":
        if t["target_sigma"] is not None:
            return TargetSpec("gaussian", sigma=t["target_sigma"])
        return TargetSpec("gaussian", sigma_w=t["sigma_w"])
    if kind == "uniform_mix":
        return TargetSpec("uniform_mix", epsilon=t["epsilon"])
    return TargetSpec(kind)


def _train_config(cfg: dict, run_seed: int, **replacements) -> TrainConfig:
    t = dict(cfg["train"])
    t.update(replacements)
    anneal = t["anneal"]
    if anneal is not None and not isinstance(anneal, AnnealSpec):
        anneal = AnnealSpec(
            sigma_final_w=anneal["sigma_final_w"],
            sigma_start_w=anneal.get("sigma_start_w", 8.0),
            fraction=anneal.get("fraction", 0.2),
        )
    tc = TrainConfig(
        loss=t["loss"],
        target=_target_spec(t),
        k=t["bins"],
        padding=PaddingSpec(t["sigma_w"], t["psi_sigma"]),
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        learning_rate=t["learning_rate"],
        beta1=t["beta1"],
        beta2=t["beta2"],
        adam_eps=t["adam_eps"],
        normalize_targets=t["normalize_targets"],
        target_noise_std=t["target_noise_std"],
        clip_threshold=t["clip_threshold"],
        anneal=anneal,
        multitask_coeff=t["multitask_coeff"],
        n_moments=t["moments"],
        seed=run_seed,
        strict_targets=t["strict_targets"],
    )
    tc.validate()
    return tc


def _build_model(cfg: dict, tc: TrainConfig, dataset: Dataset, run_seed: int) -> MlpModel:
    rng = np.random.default_rng(np.random.SeedSequence([run_seed, 1]))
    m = cfg["model"]
    return MlpModel(
        input_dim=dataset.d,
        hidden_sizes=[int(h) for h in m["hidden"]],
        heads=head_layout(tc),
        rng=rng,
        input_dropout=m["input_dropout"],
        head_bias=m["head_bias"],
    )


def _resolve_out_dir(cfg: dict, flag_out: str | None, command: str) -> Path:
    if flag_out:
        out = Path(flag_out)
    elif cfg.get("out_dir"):
        out = Path(cfg["out_dir"])
    elif os.environ.get(ENV_OUT_DIR):
        out = Path(os.environ[ENV_OUT_DIR]) / command
    else:
        out = Path("histloss_runs") / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: dict, out: Path) -> None:
    echo = {k: v for k, v in cfg.items() if k != "out_dir"}
    (out / "config.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")


def _write_metrics(records: list[MetricsRecord], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.as_dict()) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _mean_stderr(values: list) -> dict | None:
    if any(v is None for v in values):
        return None
    arr = np.asarray(values, dtype=float)
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "stderr": stderr}


def _train_once(cfg: dict, run_seed: int, tc: TrainConfig | None = None,
                model: MlpModel | None = None):
    dataset = _build_dataset(cfg, run_seed)
    if tc is None:
        tc = _train_config(cfg, run_seed)
    if model is None:
        model = _build_model(cfg, tc, dataset, run_seed)
    model, records = fit(model, dataset, tc)
    return dataset, model, records


def cmd_train(cfg: dict, out_dir: str | None = None) -> int:
    out = _resolve_out_dir(cfg, out_dir, "train")
    _echo_config(cfg, out)
    runs = int(cfg["runs"])
    base_seed = int(cfg["seed"])
    finals: list[MetricsRecord] = []
    for r in range(runs):
        run_seed = base_seed + r
        run_dir = out / f"run{r:02d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        _, model, records = _train_once(cfg, run_seed)
        _write_metrics(records, run_dir / "metrics.jsonl")
        save_model(model, run_dir / "model.npz")
        if records:
            finals.append(records[-1])
    summary: dict = {"schema": "histloss-summary-v1", "runs": runs,
                     "seed": base_seed, "epochs": cfg["train"]["epochs"]}
    if finals:
        summary["final"] = {
            "train_mae": _mean_stderr([f.train_mae for f in finals]),
            "train_rmse": _mean_stderr([f.train_rmse for f in finals]),
            "test_mae": _mean_stderr([f.test_mae for f in finals]),
            "test_rmse": _mean_stderr([f.test_rmse for f in finals]),
        }
    else:
        summary["final"] = None
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {runs} run(s) to {out}")
    return 0


def cmd_bias_sim(
    out_dir: str | None = None,
    bins: int = 100,
    points: int = 10_000,
    sigma_w_values=(0.25, 0.5, 0.75, 1.0, 1.25, 1.35),
    psi: float = 100.0,
    psi_sigma_values=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0),
    check_bounds: bool = False,
    seed: int = 0,
) -> int:
    out = _resolve_out_dir({}, out_dir, "bias-sim")

    res_sigma = analysis.bias_sweep_sigma(bins, points, sigma_w_values, psi=psi)
    _write_csv(out / "sigma_sweep.csv", ["sigma_w", "mean_abs_bias"],
               [[float(a), float(b)] for a, b in zip(res_sigma.axis, res_sigma.mean_abs_bias)])
    sample_rows = []
    for i, a in enumerate(res_sigma.axis):
        sample_rows.extend(
            [float(a), float(o), float(bi)]
            for o, bi in zip(res_sigma.offsets[i], res_sigma.biases[i])
        )
    _write_csv(out / "sigma_sweep_samples.csv", ["sigma_w", "offset", "bias"], sample_rows)

    res_pad = analysis.bias_sweep_padding(bins, points, psi_sigma_values=psi_sigma_values)
    _write_csv(out / "padding_sweep.csv", ["psi_sigma", "mean_abs_bias"],
               [[float(a), float(b)] for a, b in zip(res_pad.axis, res_pad.mean_abs_bias)])
    sample_rows = []
    for i, a in enumerate(res_pad.axis):
        sample_rows.extend(
            [float(a), float(o), float(bi)]
            for o, bi in zip(res_pad.offsets[i], res_pad.biases[i])
        )
    _write_csv(out / "padding_sweep_samples.csv", ["psi_sigma", "offset", "bias"], sample_rows)

    # fixed proposition check; needs k >= 97 for sigma_w up to 4 at psi_sigma 12
    max_bias = analysis.half_width_bias_bound_check()
    ok = max_bias <= 0.5 + 1e-9
    print(f"max |bias| over the (sigma_w, offset) sweep: {max_bias:.6g} bin widths "
          f"(bound 0.5) -> {'ok' if ok else 'VIOLATED'}")

    if check_bounds:
        rng = np.random.default_rng(seed)
        grid = build_bin_grid(-1.0, 1.0, 50, PaddingSpec(1.0, 0.0))
        pairs = [(rng.dirichlet(np.ones(50)), rng.dirichlet(np.ones(50))) for _ in range(1000)]
        violations = analysis.prediction_bound_check(grid, pairs)
        print(f"prediction-error bound violations: {violations}/1000")
        ok = ok and violations == 0
    return 0 if ok else 1


def _final_row(records: list[MetricsRecord]) -> list:
    f = records[-1]
    return [f.train_mae, f.train_rmse, f.test_mae, f.test_rmse]

_FINAL_COLS = ["train_mae", "train_rmse", "test_mae", "test_rmse"]


def _study_corrupt(cfg: dict, study: dict, epochs: int) -> tuple[list[str], list[list]]:
    rows = []
    for loss in study["losses"]:
        for ratio in study["corrupt_ratios"]:
            for r in range(int(cfg["runs"])):
                run_seed = int(cfg["seed"]) + r
                dataset = _build_dataset(cfg, run_seed)
                rng = np.random.default_rng(np.random.SeedSequence([run_seed, 2]))
                train_idx = dataset.train_idx
                targets = dataset.targets.copy()
                targets[train_idx] = analysis.corrupt_targets(targets[train_idx], ratio, rng)
                dataset.targets = targets
                tc = _train_config(cfg, run_seed, loss=loss, epochs=epochs)
                model = _build_model(cfg, tc, dataset, run_seed)
                _, records = fit(model, dataset, tc)
                rows.append([loss, ratio, r] + _final_row(records))
    return ["loss", "ratio", "run"] + _FINAL_COLS, rows


def _study_sensitivity(cfg: dict, study: dict, epochs: int) -> tuple[list[str], list[list]]:
    rows = []
    for loss in study["losses"]:
        for r in range(int(cfg["runs"])):
            run_seed = int(cfg["seed"]) + r
            tc = _train_config(cfg, run_seed, loss=loss, epochs=epochs)
            dataset, model, records = _train_once(cfg, run_seed, tc=tc)
            centers = None
            if model.heads[0].kind == "softmax":
                grid = build_bin_grid(dataset.target_min, dataset.target_max, tc.k, tc.padding)
                centers = grid.centers
            x_test, _ = dataset.test_arrays()
            norm = analysis.sensitivity_report(model, x_test, centers=centers)
            rows.append([loss, r, norm] + _final_row(records))
    return ["loss", "run", "mean_jacobian_norm"] + _FINAL_COLS, rows


def _study_anneal(cfg: dict, study: dict, epochs: int) -> tuple[list[str], list[list]]:
    rows = []
    for sigma_final_w in study["sigma_final_ws"]:
        for r in range(int(cfg["runs"])):
            run_seed = int(cfg["seed"]) + r
            fixed = _train_config(cfg, run_seed, loss="hl", epochs=epochs,
                                  sigma_w=sigma_final_w, target_sigma=None, anneal=None)
            _, _, records = _train_once(cfg, run_seed, tc=fixed)
            rows.append(["fixed", sigma_final_w, r] + _final_row(records))
            annealed = _train_config(
                cfg, run_seed, loss="hl", epochs=epochs, sigma_w=sigma_final_w,
                target_sigma=None, anneal={"sigma_final_w": sigma_final_w},
            )
            _, _, records = _train_once(cfg, run_seed, tc=annealed)
            rows.append(["annealed", sigma_final_w, r] + _final_row(records))
    return ["mode", "sigma_final_w", "run"] + _FINAL_COLS, rows


def _study_representation(cfg: dict, study: dict, epochs: int) -> tuple[list[str], list[list]]:
    losses = ("l2", "hl")
    rows = []
    for r in range(int(cfg["runs"])):
        run_seed = int(cfg["seed"]) + r
        trained: dict[str, MlpModel] = {}
        datasets: dict[str, Dataset] = {}
        for loss in losses:
            tc = _train_config(cfg, run_seed, loss=loss, epochs=epochs)
            dataset, model, records = _train_once(cfg, run_seed, tc=tc)
            trained[loss] = model
            datasets[loss] = dataset
            rows.append(["default", loss, r] + _final_row(records))
        other = {"l2": "hl", "hl": "l2"}
        for loss in losses:
            for protocol, freeze in (("fixed", True), ("initialized", False)):
                tc = _train_config(cfg, run_seed, loss=loss, epochs=epochs)
                model = _build_model(cfg, tc, datasets[loss], run_seed)
                model.load_trunk(trained[other[loss]])
                if freeze:
                    model.freeze_trunk()
                _, records = fit(model, datasets[loss], tc)
                rows.append([protocol, loss, r] + _final_row(records))
        # fresh, never-trained trunk shared by both losses
        donor_rng = np.random.default_rng(np.random.SeedSequence([run_seed, 3]))
        m = cfg["model"]
        donor = MlpModel(
            input_dim=datasets["l2"].d,
            hidden_sizes=[int(h) for h in m["hidden"]],
            heads=[head_layout(_train_config(cfg, run_seed, loss="l2", epochs=epochs))[0]],
            rng=donor_rng,
            input_dropout=m["input_dropout"],
            head_bias=m["head_bias"],
        )
        for loss in losses:
            tc = _train_config(cfg, run_seed, loss=loss, epochs=epochs)
            model = _build_model(cfg, tc, datasets[loss], run_seed)
            model.load_trunk(donor)
            model.freeze_trunk()
            _, records = fit(model, datasets[loss], tc)
            rows.append(["random", loss, r] + _final_row(records))
    return ["protocol", "loss", "run"] + _FINAL_COLS, rows


def _study_multitask(cfg: dict, study: dict, epochs: int) -> tuple[list[str], list[list]]:
    rows = []
    for r in range(int(cfg["runs"])):
        run_seed = int(cfg["seed"]) + r
        tc = _train_config(cfg, run_seed, loss="l2", epochs=epochs)
        _, _, records = _train_once(cfg, run_seed, tc=tc)
        rows.append(["l2", "", r] + _final_row(records))
        for lam in study["multitask_coeffs"]:
            tc = _train_config(cfg, run_seed, loss="multitask", epochs=epochs,
                               multitask_coeff=lam)
            _, _, records = _train_once(cfg, run_seed, tc=tc)
            rows.append(["multitask", lam, r] + _final_row(records))
    return ["loss", "coeff", "run"] + _FINAL_COLS, rows


def _study_moments(cfg: dict, study: dict, epochs: int) -> tuple[list[str], list[list]]:
    rows = []
    for r in range(int(cfg["runs"])):
        run_seed = int(cfg["seed"]) + r
        for n_moments in study["moments_list"]:
            tc = _train_config(cfg, run_seed, loss="moments", epochs=epochs,
                               moments=n_moments)
            _, _, records = _train_once(cfg, run_seed, tc=tc)
            rows.append([n_moments, r] + _final_row(records))
    return ["n_moments", "run"] + _FINAL_COLS, rows


def _study_gradnorm(cfg: dict, study: dict, epochs: int) -> tuple[list[str], list[list]]:
    rows = []
    for loss in ("hl", "l2"):
        for r in range(int(cfg["runs"])):
            run_seed = int(cfg["seed"]) + r
            dataset = _build_dataset(cfg, run_seed)
            tc = _train_config(cfg, run_seed, loss=loss, epochs=epochs)
            model = _build_model(cfg, tc, dataset, run_seed)
            for epoch, value in grad_norm_trace(model, dataset, tc):
                rows.append([loss, r, epoch, "" if value is None else value])
    return ["loss", "run", "epoch", "grad_norm_normalized"], rows


def cmd_study(kind: str, cfg: dict, out_dir: str | None = None) -> int:
    if kind not in STUDY_KINDS:
        raise ConfigError(f"unknown study kind {kind!r}, expected one of {STUDY_KINDS}")
    out = _resolve_out_dir(cfg, out_dir, f"study-{kind}")
    _echo_config(cfg, out)
    study = cfg["study"]
    epochs = study["epochs"] if study["epochs"] is not None else cfg["train"]["epochs"]
    runner = {
        "corrupt": _study_corrupt,
        "sensitivity": _study_sensitivity,
        "anneal": _study_anneal,
        "representation": _study_representation,
        "multitask": _study_multitask,
        "moments": _study_moments,
        "gradnorm": _study_gradnorm,
    }[kind]
    header, rows = runner(cfg, study, epochs)
    _write_csv(out / f"study_{kind}.csv", header, rows)
    print(f"wrote study '{kind}' ({len(rows)} rows) to {out}")
    return 0


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _train_overrides(args) -> dict:
    train: dict = {}
    for flag, key in (
        ("loss", "loss"), ("epochs", "epochs"), ("batch_size", "batch_size"),
        ("lr", "learning_rate"), ("bins", "bins"), ("sigma_w", "sigma_w"),
        ("psi_sigma", "psi_sigma"), ("target_kind", "target_kind"),
        ("epsilon", "epsilon"), ("noise_std", "target_noise_std"),
        ("clip", "clip_threshold"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            train[key] = value
    overrides: dict = {"train": train} if train else {}
    if getattr(args, "hidden", None) is not None:
        overrides.setdefault("model", {})["hidden"] = _int_list(args.hidden)
    if getattr(args, "dropout", None) is not None:
        overrides.setdefault("model", {})["input_dropout"] = args.dropout
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.runs is not None:
        overrides["runs"] = args.runs
    return overrides


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="histloss",
        description="Histogram-loss regression experiments and analyses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--runs", type=int, help="number of seeded repetitions")
        p.add_argument("--out", help="output directory")

    p_train = sub.add_parser("train", help="train a model over seeded runs")
    add_common(p_train)
    p_train.add_argument("--loss", choices=["hl", "l2", "l1", "l2_softmax", "multitask", "moments"])
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--bins", type=int)
    p_train.add_argument("--sigma-w", dest="sigma_w", type=float)
    p_train.add_argument("--psi-sigma", dest="psi_sigma", type=float)
    p_train.add_argument("--target-kind", dest="target_kind",
                         choices=["gaussian", "onebin", "uniform_mix", "projected"])
    p_train.add_argument("--epsilon", type=float)
    p_train.add_argument("--noise-std", dest="noise_std", type=float)
    p_train.add_argument("--clip", type=float)
    p_train.add_argument("--hidden", help="comma-separated hidden sizes")
    p_train.add_argument("--dropout", type=float)

    p_bias = sub.add_parser("bias-sim", help="bias simulation sweeps and bound checks")
    p_bias.add_argument("--out", help="output directory")
    p_bias.add_argument("--bins", type=int, default=100)
    p_bias.add_argument("--points", type=int, default=10_000)
    p_bias.add_argument("--sigma-w-list", default="0.25,0.5,0.75,1.0,1.25,1.35")
    p_bias.add_argument("--psi", type=float, default=100.0)
    p_bias.add_argument("--psi-sigma-list", default="0,1,2,3,4,5,6,7,8")
    p_bias.add_argument("--check-bounds", action="store_true")
    p_bias.add_argument("--seed", type=int, default=0)

    p_study = sub.add_parser("study", help="run one of the named studies")
    p_study.add_argument("kind", choices=list(STUDY_KINDS))
    add_common(p_study)
    p_study.add_argument("--epochs", type=int, help="epochs per study run")

    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            cfg = load_config(args.config, _train_overrides(args))
            return cmd_train(cfg, out_dir=args.out)
        if args.command == "bias-sim":
            return cmd_bias_sim(
                out_dir=args.out,
                bins=args.bins,
                points=args.points,
                sigma_w_values=_float_list(args.sigma_w_list),
                psi=args.psi,
                psi_sigma_values=_float_list(args.psi_sigma_list),
                check_bounds=args.check_bounds,
                seed=args.seed,
            )
        overrides: dict = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.runs is not None:
            overrides["runs"] = args.runs
        if args.epochs is not None:
            overrides["study"] = {"epochs": args.epochs}
        cfg = load_config(args.config, overrides)
        return cmd_study(args.kind, cfg, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
