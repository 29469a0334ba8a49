import numpy as np
import pytest

from histloss import (
    AnnealSpec,
    Dataset,
    HeadSpec,
    MlpModel,
    TargetSpec,
    TrainConfig,
    adam_step,
    anneal_sigma,
    clip_global_norm,
    composite_loss_grads,
    fit,
    grad_norm_trace,
    make_synthetic,
    split,
    standardize,
)
from histloss.net import backward, forward
from histloss.trainer import AdamState, global_grad_norm, head_layout


def sine_dataset(n=400, seed=5, test_fraction=0.2, split_seed=0):
    ds = make_synthetic("sine", n, 1, 0.05, seed=seed)
    return standardize(split(ds, test_fraction, seed=split_seed))


def build_model(ds, cfg, seed=0, hidden=(16,)):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    return MlpModel(ds.d, list(hidden), head_layout(cfg), rng=rng)


class TestAdam:
    def test_zero_gradient_leaves_everything_unchanged(self):
        params = [np.array([1.0, -2.0]), np.array([[3.0]])]
        state = AdamState(params)
        before = [p.copy() for p in params]
        adam_step(params, [np.zeros(2), np.zeros((1, 1))], state, lr=0.1)
        assert all(np.array_equal(a, b) for a, b in zip(params, before))
        assert all(np.all(m == 0) for m in state.m)
        assert all(np.all(v == 0) for v in state.v)

    def test_first_step_with_unit_gradient(self):
        # bias-corrected formulas at t = 1: mhat = 1, vhat = 1
        params = [np.array([0.0])]
        state = AdamState(params)
        adam_step(params, [np.array([1.0])], state, lr=1e-3, eps=1e-7)
        expected = -1e-3 * 1.0 / (1.0 + 1e-7)
        assert params[0][0] == pytest.approx(expected, rel=1e-15)

    def test_constant_gradient_step_approaches_lr(self):
        params = [np.array([0.0])]
        state = AdamState(params)
        lr = 1e-3
        prev = params[0][0]
        for t in range(500):
            adam_step(params, [np.array([2.5])], state, lr=lr)
            step = params[0][0] - prev
            prev = params[0][0]
        assert step == pytest.approx(-lr, rel=1e-4)

    def test_nonfinite_gradient_aborts(self):
        params = [np.array([0.0])]
        state = AdamState(params)
        with pytest.raises(FloatingPointError, match="non-finite"):
            adam_step(params, [np.array([float("nan")])], state, lr=1e-3)

    def test_mask_skips_frozen_entries(self):
        params = [np.array([1.0]), np.array([1.0])]
        state = AdamState(params)
        adam_step(params, [np.ones(1), np.ones(1)], state, lr=0.1,
                  update_mask=[False, True])
        assert params[0][0] == 1.0
        assert params[1][0] != 1.0


class TestAnnealSigma:
    def test_constant_after_anneal_window(self):
        for epoch in (20, 21, 50, 99):
            assert anneal_sigma(epoch, 100, 8.0, 1.0, 0.2) == 1.0

    def test_equal_start_and_final_is_constant(self):
        for epoch in range(10):
            assert anneal_sigma(epoch, 10, 2.0, 2.0, 0.2) == 2.0

    def test_geometric_value_at_epoch_ten(self):
        # 8w -> 1w over ceil(0.2*100) = 20 epochs: tau^10 = (1/8)^(1/2)
        got = anneal_sigma(10, 100, 8.0, 1.0, 0.2)
        assert got == pytest.approx(8.0 / np.sqrt(8.0), rel=1e-12)

    def test_sequence_non_increasing_and_hits_final(self):
        values = [anneal_sigma(e, 37, 8.0, 1.5, 0.2) for e in range(37)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(1.5, rel=1e-12)
        assert values[0] == 8.0

    def test_validation(self):
        with pytest.raises(ValueError):
            anneal_sigma(0, 10, 1.0, 2.0, 0.2)
        with pytest.raises(ValueError):
            anneal_sigma(0, 10, 2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            anneal_sigma(-1, 10, 2.0, 1.0, 0.2)


class TestClip:
    def test_postclip_norm_never_exceeds_threshold(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            grads = [rng.normal(0, 10, size=rng.integers(1, 20)) for _ in range(3)]
            threshold = float(rng.uniform(0.01, 5.0))
            clip_global_norm(grads, threshold)
            assert global_grad_norm(grads) <= threshold

    def test_small_gradients_untouched(self):
        grads = [np.array([0.1, 0.1])]
        before = grads[0].copy()
        clip_global_norm(grads, 10.0)
        assert np.array_equal(grads[0], before)

    def test_training_postclip_norms_bounded(self):
        ds = sine_dataset()
        cfg = TrainConfig(loss="l2", epochs=3, batch_size=64, clip_threshold=0.05, seed=0)
        model = build_model(ds, cfg)
        seen = []
        fit(model, ds, cfg, step_hook=lambda e, s, g: seen.append(global_grad_norm(g)))
        assert seen and max(seen) <= 0.05


class TestFit:
    def test_zero_epochs_is_identity(self):
        ds = sine_dataset()
        cfg = TrainConfig(loss="l2", epochs=0, seed=0)
        model = build_model(ds, cfg)
        before = [p.copy() for p in model.parameters()]
        out, records = fit(model, ds, cfg)
        assert records == []
        assert out is model
        assert all(np.array_equal(a, b) for a, b in zip(before, model.parameters()))

    def test_linear_task_l2_converges(self):
        rng = np.random.default_rng(42)
        x = rng.uniform(-1.0, 1.0, size=(512, 1))
        ds = standardize(split(Dataset(features=x, targets=x[:, 0]), 0.0, seed=0))
        cfg = TrainConfig(loss="l2", epochs=200, batch_size=64, learning_rate=1e-2, seed=0)
        model = MlpModel(1, [], head_layout(cfg), rng=np.random.default_rng(7))
        _, records = fit(model, ds, cfg)
        assert records[-1].train_mae < 0.01

    def test_linear_task_hl_reaches_one_bin_width(self):
        rng = np.random.default_rng(42)
        x = rng.uniform(-1.0, 1.0, size=(512, 1))
        ds = standardize(split(Dataset(features=x, targets=x[:, 0]), 0.0, seed=0))
        cfg = TrainConfig(loss="hl", epochs=200, batch_size=32, learning_rate=5e-2, seed=0)
        model = MlpModel(1, [], head_layout(cfg), rng=np.random.default_rng(7))
        _, records = fit(model, ds, cfg)
        w = (ds.target_max - ds.target_min) / (100 - 2 * 2.0 * 3.0)
        assert records[-1].train_mae < w

    def test_determinism_bitwise(self):
        ds = sine_dataset()
        cfg = TrainConfig(loss="hl", epochs=4, batch_size=64, seed=3)
        m1 = build_model(ds, cfg, seed=3)
        m2 = m1.clone()
        _, r1 = fit(m1, ds, cfg)
        _, r2 = fit(m2, ds, cfg)
        assert all(np.array_equal(a, b) for a, b in zip(m1.parameters(), m2.parameters()))
        assert [x.as_dict() for x in r1] == [x.as_dict() for x in r2]

    def test_mae_never_exceeds_rmse(self):
        ds = sine_dataset()
        for loss in ("hl", "l2", "l1", "l2_softmax"):
            cfg = TrainConfig(loss=loss, epochs=3, batch_size=64, seed=1)
            model = build_model(ds, cfg)
            _, records = fit(model, ds, cfg)
            for rec in records:
                assert rec.train_mae <= rec.train_rmse + 1e-12
                assert rec.test_mae <= rec.test_rmse + 1e-12

    def test_head_kind_mismatch_rejected(self):
        ds = sine_dataset()
        cfg = TrainConfig(loss="hl", epochs=1, seed=0)
        wrong = MlpModel(ds.d, [8], [HeadSpec.scalar()], rng=np.random.default_rng(0))
        with pytest.raises(ValueError, match="heads"):
            fit(wrong, ds, cfg)

    def test_target_outside_grid_strict_error(self):
        ds = sine_dataset()
        cfg = TrainConfig(loss="hl", epochs=1, seed=0, grid_range=(-0.5, 0.5),
                          padding=__import__("histloss").PaddingSpec(2.0, 0.0))
        model = build_model(ds, cfg)
        with pytest.raises(ValueError, match="outside"):
            fit(model, ds, cfg)

    def test_l2_noise_changes_trajectory_only_with_noise(self):
        ds = sine_dataset()
        base = TrainConfig(loss="l2", epochs=3, batch_size=64, seed=2)
        noisy = TrainConfig(loss="l2", epochs=3, batch_size=64, seed=2,
                            target_noise_std=0.05)
        m1 = build_model(ds, base, seed=2)
        m2 = m1.clone()
        _, r1 = fit(m1, ds, base)
        _, r2 = fit(m2, ds, noisy)
        assert not all(np.array_equal(a, b) for a, b in zip(m1.parameters(), m2.parameters()))
        zero_noise = TrainConfig(loss="l2", epochs=3, batch_size=64, seed=2,
                                 target_noise_std=0.0)
        m3 = build_model(ds, base, seed=2)
        _, r3 = fit(m3, ds, zero_noise)
        assert all(np.array_equal(a, b) for a, b in zip(m1.parameters(), m3.parameters()))


class TestReductionIdentities:
    def test_multitask_zero_coeff_matches_plain_l2_bitwise(self):
        ds = sine_dataset()
        mcfg = TrainConfig(loss="multitask", multitask_coeff=0.0, epochs=4,
                           batch_size=64, seed=7)
        lcfg = TrainConfig(loss="l2", epochs=4, batch_size=64, seed=7)
        heads = head_layout(mcfg)  # scalar + softmax; same shapes for both runs
        rng = np.random.default_rng(np.random.SeedSequence([7, 1]))
        m1 = MlpModel(ds.d, [16], heads, rng=rng)
        m2 = m1.clone()
        _, r1 = fit(m1, ds, mcfg)
        _, r2 = fit(m2, ds, lcfg)
        assert all(np.array_equal(a, b) for a, b in zip(m1.parameters(), m2.parameters()))
        # identical error/loss trajectory; sigma is target metadata l2 lacks
        strip = lambda recs: [{k: v for k, v in x.as_dict().items() if k != "sigma"}
                              for x in recs]
        assert strip(r1) == strip(r2)

    def test_moments_one_matches_plain_l2_bitwise(self):
        ds = sine_dataset()
        mcfg = TrainConfig(loss="moments", n_moments=1, epochs=4, batch_size=64, seed=8)
        lcfg = TrainConfig(loss="l2", epochs=4, batch_size=64, seed=8)
        m1 = build_model(ds, mcfg, seed=8)
        m2 = m1.clone()
        _, r1 = fit(m1, ds, mcfg)
        _, r2 = fit(m2, ds, lcfg)
        assert all(np.array_equal(a, b) for a, b in zip(m1.parameters(), m2.parameters()))
        assert [x.as_dict() for x in r1] == [x.as_dict() for x in r2]

    def test_flat_annealing_matches_fixed_sigma_bitwise(self):
        ds = sine_dataset()
        fixed = TrainConfig(loss="hl", target=TargetSpec("gaussian", sigma_w=2.0),
                            epochs=5, batch_size=64, seed=9)
        flat = TrainConfig(loss="hl", target=TargetSpec("gaussian", sigma_w=2.0),
                           anneal=AnnealSpec(sigma_final_w=2.0, sigma_start_w=2.0),
                           epochs=5, batch_size=64, seed=9)
        m1 = build_model(ds, fixed, seed=9)
        m2 = m1.clone()
        _, r1 = fit(m1, ds, fixed)
        _, r2 = fit(m2, ds, flat)
        assert all(np.array_equal(a, b) for a, b in zip(m1.parameters(), m2.parameters()))
        assert [x.as_dict() for x in r1] == [x.as_dict() for x in r2]


class TestAnnealedTraining:
    def test_sigma_schedule_recorded_and_non_increasing(self):
        ds = sine_dataset()
        cfg = TrainConfig(loss="hl", target=TargetSpec("gaussian", sigma_w=1.0),
                          anneal=AnnealSpec(sigma_final_w=1.0, sigma_start_w=8.0,
                                            fraction=0.5),
                          epochs=10, batch_size=64, seed=4)
        model = build_model(ds, cfg, seed=4)
        _, records = fit(model, ds, cfg)
        sigmas = [r.sigma for r in records]
        assert all(a >= b for a, b in zip(sigmas, sigmas[1:]))
        grid_w = None
        from histloss import build_bin_grid
        from histloss.grid import PaddingSpec as PS
        grid_w = build_bin_grid(ds.target_min, ds.target_max, cfg.k, cfg.padding).w
        assert sigmas[0] == pytest.approx(8.0 * grid_w, rel=1e-12)
        assert sigmas[-1] == pytest.approx(1.0 * grid_w, rel=1e-12)

    def test_anneal_requires_gaussian_histogram_loss(self):
        with pytest.raises(ValueError, match="gaussian"):
            TrainConfig(loss="l2", anneal=AnnealSpec(sigma_final_w=1.0)).validate()
        with pytest.raises(ValueError, match="gaussian"):
            TrainConfig(loss="hl", target=TargetSpec("onebin"),
                        anneal=AnnealSpec(sigma_final_w=1.0)).validate()


class TestCompositeGrads:
    def _trace_setup(self, lam):
        rng = np.random.default_rng(11)
        model = MlpModel(2, [6], [HeadSpec.scalar(), HeadSpec.softmax(5)], rng=rng)
        x = rng.normal(0, 1, (4, 2))
        y = rng.uniform(0, 1, 4)
        q = rng.dirichlet(np.ones(5), size=4)
        cfg = TrainConfig(loss="multitask", multitask_coeff=lam, k=5, epochs=1)
        trace = forward(model, x)
        return model, trace, y, q, cfg

    def test_zero_coeff_zeroes_aux_head(self):
        model, trace, y, q, cfg = self._trace_setup(0.0)
        grads, losses = composite_loss_grads(trace, y, cfg, q_rows=q)
        l2_cfg = TrainConfig(loss="l2", epochs=1)
        g_l2, losses_l2 = composite_loss_grads(trace, y, l2_cfg)
        assert np.array_equal(grads[0], g_l2[0])
        assert np.all(grads[1] == 0.0)
        assert np.array_equal(losses, losses_l2)

    def test_unit_coeff_is_sum_of_parts(self):
        model, trace, y, q, cfg = self._trace_setup(1.0)
        grads, _ = composite_loss_grads(trace, y, cfg, q_rows=q)
        combined = backward(model, trace, grads).arrays
        g_scalar = backward(model, trace, [grads[0], np.zeros_like(grads[1])]).arrays
        g_hist = backward(model, trace, [np.zeros_like(grads[0]), grads[1]]).arrays
        for c, s, h in zip(combined, g_scalar, g_hist):
            assert np.allclose(c, s + h, atol=1e-12)


class TestGradNormTrace:
    def test_restricted_to_hl_and_l2(self):
        ds = sine_dataset()
        cfg = TrainConfig(loss="l1", epochs=1, seed=0)
        model = build_model(ds, cfg)
        with pytest.raises(ValueError, match="hl or l2"):
            grad_norm_trace(model, ds, cfg)

    def test_exact_fit_yields_omitted_records(self):
        # scalar model planted at the exact normalized optimum of y = x
        rng = np.random.default_rng(0)
        x_raw = rng.uniform(-1.0, 1.0, size=(64, 1))
        ds = standardize(split(Dataset(features=x_raw, targets=x_raw[:, 0]), 0.0, seed=0))
        x_std, y = ds.train_arrays()
        scale = ds.target_max - ds.target_min
        feat_sigma = ds.feature_stds[0]
        feat_mu = ds.feature_means[0]
        cfg = TrainConfig(loss="l2", epochs=2, learning_rate=1e-300, seed=0)
        model = MlpModel(1, [], head_layout(cfg), rng=np.random.default_rng(1))
        model.head_w[0][0, 0] = feat_sigma / scale
        model.head_b[0][0] = (feat_mu - ds.target_min) / scale
        model.bump_version()
        trace = grad_norm_trace(model, ds, cfg)
        assert all(value is None for _, value in trace)

    def test_hl_trace_less_variable_than_l2(self):
        ds = standardize(split(make_synthetic("sine", 2000, 1, 0.05, seed=1), 0.1, seed=1))
        values = {}
        for loss in ("hl", "l2"):
            cfg = TrainConfig(loss=loss, epochs=50, seed=1)
            model = MlpModel(
                ds.d, [32, 32], head_layout(cfg),
                rng=np.random.default_rng(np.random.SeedSequence([1, 1])),
            )
            trace = grad_norm_trace(model, ds, cfg)
            arr = np.array([v for _, v in trace if v is not None])
            values[loss] = arr.std() / arr.mean()
        assert values["hl"] < values["l2"]


class TestConfigValidation:
    def test_noise_and_clip_restricted_to_l2(self):
        with pytest.raises(ValueError, match="l2"):
            TrainConfig(loss="hl", target_noise_std=0.1).validate()
        with pytest.raises(ValueError, match="l2"):
            TrainConfig(loss="l1", clip_threshold=1.0).validate()

    def test_basic_field_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(loss="nope").validate()
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1).validate()
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0).validate()
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0).validate()
        with pytest.raises(ValueError):
            TrainConfig(n_moments=0).validate()
