"""AGFN: adversarial GFlowNet solver for TSP and CVRP"""

from .models import (
    ProblemKind,
    Instance,
    GenConfig,
    Trajectory,
    DecodeConfig,
    TrainConfig,
    GapReport,
)
from .parser import InstanceParser, ConfigLoader
from .network import PolicyNet, Discriminator
from .pipeline import Trainer, decode_batch, improve, gap_report

__version__ = "0.1.0"

__all__ = [
    # Models
    "ProblemKind",
    "Instance",
    "GenConfig",
    "Trajectory",
    "DecodeConfig",
    "TrainConfig",
    "GapReport",
    # Parser
    "InstanceParser",
    "ConfigLoader",
    # Networks
    "PolicyNet",
    "Discriminator",
    # Pipeline
    "Trainer",
    "decode_batch",
    "improve",
    "gap_report",
]
