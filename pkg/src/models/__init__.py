"""Data models for the AGFN routing solver"""

from .instance import (
    ProblemKind,
    Instance,
    GenConfig,
)
from .trajectory import Trajectory
from .graph import SparseGraph
from .configs import (
    DecodeMode,
    LocalSearchVariant,
    PBMode,
    LossMode,
    LogZMode,
    PolicyNetConfig,
    DiscriminatorConfig,
    DecodeConfig,
    LocalSearchConfig,
    TrainConfig,
)
from .report import (
    GapReport,
    RunManifest,
)

__all__ = [
    "ProblemKind",
    "Instance",
    "GenConfig",
    "Trajectory",
    "SparseGraph",
    "DecodeMode",
    "LocalSearchVariant",
    "PBMode",
    "LossMode",
    "LogZMode",
    "PolicyNetConfig",
    "DiscriminatorConfig",
    "DecodeConfig",
    "LocalSearchConfig",
    "TrainConfig",
    "GapReport",
    "RunManifest",
]
