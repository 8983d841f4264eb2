"""Minimal reverse-mode differentiation core (numpy, float64)"""

from .tensor import (
    Tensor,
    Tape,
    AutodiffError,
    ShapeError,
    DomainError,
    UsageError,
    backward,
    constant,
)
from .params import ParameterStore, adam_step
from .checkpoint import save_checkpoint, load_checkpoint, CHECKPOINT_VERSION
from . import ops

__all__ = [
    "Tensor",
    "Tape",
    "AutodiffError",
    "ShapeError",
    "DomainError",
    "UsageError",
    "backward",
    "constant",
    "ParameterStore",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_VERSION",
    "ops",
]
