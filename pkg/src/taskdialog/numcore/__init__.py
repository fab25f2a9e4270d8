"""Minimal reverse-mode numeric core for the dialogue network."""

from .tensor import (
    EmptySourceError,
    GraphError,
    ShapeError,
    Tensor,
    add,
    add_n,
    backward,
    concat,
    dot,
    gather_sum,
    log,
    log_clamped,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    pack,
    row,
    rows,
    scale,
    sigmoid,
    softmax,
    stack,
    sub,
    tanh,
    transpose,
    tsum,
)
from .ops import (
    AttentionPool,
    AttnParams,
    ConfigError,
    GruParams,
    JointDistribution,
    attention,
    bce_with_logit,
    copy_combine,
    dropout,
    gru_cell,
)
from .optim import OptimError, OptimizerState, adam_step, zero_grads
from .checkpoint import (
    CHECKPOINT_VERSION,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from .gradcheck import analytic_grads, check_gradients, max_relative_error, numeric_grads

__all__ = [
    "AttentionPool", "AttnParams", "CHECKPOINT_VERSION", "CheckpointError",
    "ConfigError", "EmptySourceError", "GraphError", "GruParams",
    "JointDistribution", "OptimError", "OptimizerState", "ShapeError", "Tensor",
    "adam_step", "add", "add_n", "analytic_grads", "attention", "backward",
    "bce_with_logit", "check_gradients", "concat", "copy_combine", "dot", "dropout", "gather_sum",
    "gru_cell", "load_checkpoint", "log", "log_clamped", "matmul",
    "max_relative_error", "mean", "mul", "neg", "no_grad", "numeric_grads", "pack",
    "row", "rows", "save_checkpoint", "scale", "sigmoid", "softmax", "stack",
    "sub", "tanh", "transpose", "tsum", "zero_grads",
]
