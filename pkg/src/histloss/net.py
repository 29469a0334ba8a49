"""Dense ReLU networks with manual forward/backward passes.

A model is a shared ReLU trunk plus one or more output heads attached to
the last hidden layer: scalar heads emit a real, softmax heads emit a
k-way histogram. Everything is float64 so gradient checks are meaningful.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .loss import softmax

__all__ = [
    "HeadSpec",
    "MlpModel",
    "ForwardTrace",
    "ParamGrads",
    "forward",
    "backward",
    "input_jacobian_norm",
    "save_model",
    "load_model",
]

CHECKPOINT_SCHEMA = "histloss-model-v1"


@dataclass(frozen=True)
class HeadSpec:
    kind: str  # "scalar" or "softmax"
    size: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("scalar", "softmax"):
            raise ValueError(f"head kind must be 'scalar' or 'softmax', got {self.kind!r}")
        if self.kind == "scalar" and self.size != 1:
            raise ValueError("scalar heads have size 1")
        if self.size < 1:
            raise ValueError(f"head size must be >= 1, got {self.size}")

    @classmethod
    def scalar(cls) -> "HeadSpec":
        return cls("scalar", 1)

    @classmethod
    def softmax(cls, k: int) -> "HeadSpec":
        return cls("softmax", k)


def _lecun_init(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    # variance 1/fan_in
    return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))


class MlpModel:
    """ReLU trunk with per-head linear outputs. Single-writer: training
    mutates parameters in place and bumps `version` so stale traces are
    rejected."""

    def __init__(
        self,
        input_dim: int,
        hidden_sizes: list[int],
        heads: list[HeadSpec],
        rng: np.random.Generator | int | None = None,
        input_dropout: float = 0.0,
        head_bias: bool = True,
    ):
        if input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {input_dim}")
        if not heads:
            raise ValueError("model needs at least one head")
        if not (0.0 <= input_dropout < 1.0):
            raise ValueError(f"input_dropout must be in [0, 1), got {input_dropout}")
        rng = np.random.default_rng(rng)
        self.input_dim = int(input_dim)
        self.hidden_sizes = [int(h) for h in hidden_sizes]
        self.heads = list(heads)
        self.input_dropout = float(input_dropout)
        self.head_bias = bool(head_bias)
        self.trunk_frozen = False
        self.version = 0

        sizes = [self.input_dim] + self.hidden_sizes
        self.trunk_w = [_lecun_init(rng, sizes[i + 1], sizes[i]) for i in range(len(self.hidden_sizes))]
        self.trunk_b = [np.zeros(s) for s in self.hidden_sizes]
        feat = sizes[-1]
        self.head_w = [_lecun_init(rng, spec.size, feat) for spec in self.heads]
        self.head_b = [np.zeros(spec.size) if head_bias else None for spec in self.heads]

    @property
    def feature_dim(self) -> int:
        return self.hidden_sizes[-1] if self.hidden_sizes else self.input_dim

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays in a fixed order (trunk first, then heads)."""
        params: list[np.ndarray] = []
        for w, b in zip(self.trunk_w, self.trunk_b):
            params.extend([w, b])
        for w, b in zip(self.head_w, self.head_b):
            params.append(w)
            if b is not None:
                params.append(b)
        return params

    def trainable_mask(self) -> list[bool]:
        """Aligned with parameters(); False for frozen trunk entries."""
        mask = [not self.trunk_frozen] * (2 * len(self.trunk_w))
        for b in self.head_b:
            mask.extend([True] if b is None else [True, True])
        return mask

    def bump_version(self) -> None:
        self.version += 1

    def clone(self) -> "MlpModel":
        other = object.__new__(MlpModel)
        other.input_dim = self.input_dim
        other.hidden_sizes = list(self.hidden_sizes)
        other.heads = list(self.heads)
        other.input_dropout = self.input_dropout
        other.head_bias = self.head_bias
        other.trunk_frozen = self.trunk_frozen
        other.version = 0
        other.trunk_w = [w.copy() for w in self.trunk_w]
        other.trunk_b = [b.copy() for b in self.trunk_b]
        other.head_w = [w.copy() for w in self.head_w]
        other.head_b = [None if b is None else b.copy() for b in self.head_b]
        return other

    def freeze_trunk(self, frozen: bool = True) -> "MlpModel":
        """Mark trunk parameters non-trainable; gradients are still computed
        but updates skip them."""
        self.trunk_frozen = bool(frozen)
        return self

    def load_trunk(self, source: "MlpModel") -> "MlpModel":
        """Copy trunk parameters from a model with the same trunk shape."""
        if source.input_dim != self.input_dim or source.hidden_sizes != self.hidden_sizes:
            raise ValueError(
                f"trunk shapes differ: {source.input_dim}-{source.hidden_sizes} "
                f"vs {self.input_dim}-{self.hidden_sizes}"
            )
        self.trunk_w = [w.copy() for w in source.trunk_w]
        self.trunk_b = [b.copy() for b in source.trunk_b]
        self.bump_version()
        return self

    def reinitialize_head(self, rng: np.random.Generator | int | None = None) -> "MlpModel":
        """Redraw all head weights from the initializer; biases reset to 0."""
        rng = np.random.default_rng(rng)
        feat = self.feature_dim
        self.head_w = [_lecun_init(rng, spec.size, feat) for spec in self.heads]
        self.head_b = [np.zeros(spec.size) if self.head_bias else None for spec in self.heads]
        self.bump_version()
        return self


@dataclass
class ForwardTrace:
    """Per-layer values retained for backprop; valid only while the model
    version matches."""

    x: np.ndarray                      # input after dropout, (n, d)
    pre: list[np.ndarray]              # trunk pre-activations
    acts: list[np.ndarray]             # [input, hidden activations...]
    head_logits: list[np.ndarray]      # (n, size) per head; (n,) for scalar
    head_probs: list[np.ndarray | None]
    version: int

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def scalar_out(self, head: int = 0) -> np.ndarray:
        return self.head_logits[head]

    def probs(self, head: int = 0) -> np.ndarray:
        p = self.head_probs[head]
        if p is None:
            raise ValueError(f"head {head} is not a softmax head")
        return p


@dataclass
class ParamGrads:
    """Gradient arrays aligned with MlpModel.parameters()."""

    arrays: list[np.ndarray]
    d_input: np.ndarray | None = field(default=None)


def forward(
    model: MlpModel,
    x: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> ForwardTrace:
    """Run the network on a sample or a batch (rows are samples)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"expected inputs of width {model.input_dim}, got shape {x.shape}")
    if train_mode and model.input_dropout > 0.0:
        if rng is None:
            raise ValueError("input dropout in train mode requires an rng")
        keep = 1.0 - model.input_dropout
        mask = rng.random(x.shape) < keep
        x = x * mask / keep  # inverted scaling

    acts = [x]
    pre = []
    for w, b in zip(model.trunk_w, model.trunk_b):
        z = acts[-1] @ w.T + b
        pre.append(z)
        acts.append(np.maximum(z, 0.0))

    feats = acts[-1]
    head_logits: list[np.ndarray] = []
    head_probs: list[np.ndarray | None] = []
    for spec, w, b in zip(model.heads, model.head_w, model.head_b):
        logits = feats @ w.T
        if b is not None:
            logits = logits + b
        if spec.kind == "softmax":
            head_logits.append(logits)
            head_probs.append(softmax(logits, axis=1))
        else:
            head_logits.append(logits[:, 0])
            head_probs.append(None)
    return ForwardTrace(x=x, pre=pre, acts=acts, head_logits=head_logits,
                        head_probs=head_probs, version=model.version)


def backward(
    model: MlpModel,
    trace: ForwardTrace,
    head_grads: list[np.ndarray],
    compute_input_grad: bool = False,
) -> ParamGrads:
    """Exact gradients of sum_j g_j . outputs_j for every parameter.

    head_grads holds, per head, the loss gradient with respect to that
    head's pre-activations: shape (n, size) for softmax heads (e.g. h - q
    rows for the histogram loss), (n,) for scalar heads.
    """
    if trace.version != model.version:
        raise ValueError(
            f"stale trace: model version {model.version}, trace version {trace.version}"
        )
    if len(head_grads) != len(model.heads):
        raise ValueError(f"expected {len(model.heads)} head gradients, got {len(head_grads)}")

    feats = trace.acts[-1]
    d_feats = np.zeros_like(feats)
    grads: list[np.ndarray] = []
    head_grad_arrays: list[np.ndarray] = []
    for spec, w, b, g in zip(model.heads, model.head_w, model.head_b, head_grads):
        g = np.asarray(g, dtype=float)
        gm = g[:, None] if spec.kind == "scalar" else g
        if gm.shape != (trace.n, spec.size):
            raise ValueError(f"head gradient shape {g.shape} does not match head {spec}")
        dw = gm.T @ feats
        head_grad_arrays.append(dw)
        if b is not None:
            head_grad_arrays.append(gm.sum(axis=0))
        d_feats += gm @ w

    trunk_grads: list[np.ndarray] = []
    d_act = d_feats
    for layer in range(len(model.trunk_w) - 1, -1, -1):
        dz = d_act * (trace.pre[layer] > 0.0)
        trunk_grads.append(dz.sum(axis=0))            # bias
        trunk_grads.append(dz.T @ trace.acts[layer])  # weight
        d_act = dz @ model.trunk_w[layer]
    trunk_grads.reverse()

    grads = trunk_grads + head_grad_arrays
    return ParamGrads(arrays=grads, d_input=d_act if compute_input_grad else None)


def input_gradients(
    model: MlpModel, x: np.ndarray, centers: np.ndarray | None = None
) -> np.ndarray:
    """Gradient of the scalar prediction with respect to each input row.

    Scalar primary head: the prediction is the head output. Softmax primary
    head: the prediction is the histogram mean, which needs bin centers.
    """
    trace = forward(model, x, train_mode=False)
    spec = model.heads[0]
    if spec.kind == "scalar":
        g0: np.ndarray = np.ones(trace.n)
    else:
        if centers is None:
            raise ValueError("softmax head predictions need bin centers")
        h = trace.probs(0)
        m = h @ centers
        g0 = h * (centers[None, :] - m[:, None])
    head_grads: list[np.ndarray] = [g0]
    for other in model.heads[1:]:
        shape = (trace.n,) if other.kind == "scalar" else (trace.n, other.size)
        head_grads.append(np.zeros(shape))
    return backward(model, trace, head_grads, compute_input_grad=True).d_input


def input_jacobian_norm(
    model: MlpModel, x: np.ndarray, centers: np.ndarray | None = None
) -> float:
    """Frobenius norm of d(prediction)/d(input) at a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a single input vector, got shape {x.shape}")
    return float(np.linalg.norm(input_gradients(model, x, centers=centers)[0]))


def save_model(model: MlpModel, path) -> None:
    """Versioned checkpoint; float64 arrays round-trip exactly."""
    meta = {
        "schema": CHECKPOINT_SCHEMA,
        "input_dim": model.input_dim,
        "hidden_sizes": model.hidden_sizes,
        "heads": [[s.kind, s.size] for s in model.heads],
        "input_dropout": model.input_dropout,
        "head_bias": model.head_bias,
        "trunk_frozen": model.trunk_frozen,
    }
    arrays = {}
    for i, (w, b) in enumerate(zip(model.trunk_w, model.trunk_b)):
        arrays[f"trunk_w{i}"] = w
        arrays[f"trunk_b{i}"] = b
    for i, (w, b) in enumerate(zip(model.head_w, model.head_b)):
        arrays[f"head_w{i}"] = w
        if b is not None:
            arrays[f"head_b{i}"] = b
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_model(path) -> MlpModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("schema") != CHECKPOINT_SCHEMA:
            raise ValueError(f"unsupported checkpoint schema {meta.get('schema')!r}")
        model = object.__new__(MlpModel)
        model.input_dim = int(meta["input_dim"])
        model.hidden_sizes = [int(h) for h in meta["hidden_sizes"]]
        model.heads = [HeadSpec(kind, int(size)) for kind, size in meta["heads"]]
        model.input_dropout = float(meta["input_dropout"])
        model.head_bias = bool(meta["head_bias"])
        model.trunk_frozen = bool(meta["trunk_frozen"])
        model.version = 0
        model.trunk_w = [data[f"trunk_w{i}"] for i in range(len(model.hidden_sizes))]
        model.trunk_b = [data[f"trunk_b{i}"] for i in range(len(model.hidden_sizes))]
        model.head_w = [data[f"head_w{i}"] for i in range(len(model.heads))]
        model.head_b = [
            data[f"head_b{i}"] if model.head_bias else None for i in range(len(model.heads))
        ]
    return model
