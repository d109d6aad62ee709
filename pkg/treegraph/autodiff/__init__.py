"""Minimal numpy tensor engine with reverse-mode differentiation."""

from . import ops
from .checkpoint import (
    CHECKPOINT_MAGIC,
    checkpoint_size_mb,
    load_checkpoint,
    save_checkpoint,
)
from .gradcheck import grad_check
from .layers import (
    BatchNorm,
    ConvBlock,
    Dropout,
    Linear,
    LinearBlock,
    Module,
    ModuleList,
    PointwiseConv,
)
from .tensor import DEFAULT_DTYPE, Function, Parameter, Tensor, is_grad_enabled, no_grad

__all__ = [
    "ops",
    "CHECKPOINT_MAGIC",
    "checkpoint_size_mb",
    "load_checkpoint",
    "save_checkpoint",
    "grad_check",
    "BatchNorm",
    "ConvBlock",
    "Dropout",
    "Linear",
    "LinearBlock",
    "Module",
    "ModuleList",
    "PointwiseConv",
    "DEFAULT_DTYPE",
    "Function",
    "Parameter",
    "Tensor",
    "is_grad_enabled",
    "no_grad",
]
