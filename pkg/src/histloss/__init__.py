"""Histogram-loss regression: bin grids, target weightings, histogram and
baseline losses with exact gradients, a small trainable dense network, and
analysis tools for the loss's bias and gradient-norm properties."""

from .analysis import (
    BiasSweepResult,
    bias_sweep_padding,
    bias_sweep_sigma,
    corrupt_targets,
    half_width_bias_bound_check,
    prediction_bound_check,
    sensitivity_report,
    truncated_discrete_mean,
)
from .data import Dataset, load_csv, make_synthetic, split, standardize
from .grid import BinGrid, PaddingSpec, bin_index, bin_indices, build_bin_grid
from .loss import (
    PredictionHistogram,
    entropy_floor,
    hl_grad_logits,
    hl_loss,
    l1_loss,
    l1_subgradient,
    l2_grad,
    l2_loss,
    l2_softmax_loss,
    last_layer_grad_bound_check,
)
from .net import (
    HeadSpec,
    MlpModel,
    backward,
    forward,
    input_jacobian_norm,
    load_model,
    save_model,
)
from .targets import (
    TargetSpec,
    gaussian_weights,
    onebin_weights,
    projected_weights,
    target_mean,
    target_mean_bias,
    uniform_mix_weights,
    weight_matrix,
)
from .trainer import (
    AnnealSpec,
    MetricsRecord,
    TrainConfig,
    adam_step,
    anneal_sigma,
    clip_global_norm,
    composite_loss_grads,
    fit,
    grad_norm_trace,
)

__version__ = "0.1.0"
