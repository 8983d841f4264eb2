"""Experiment configuration models"""

import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from ..errors import ConfigError
from .instance import ProblemKind


class DecodeMode(Enum):
    """Route construction rule"""
    SAMPLE = "sample"
    GREEDY = "greedy"
    HYBRID = "hybrid"


class LocalSearchVariant(Enum):
    """Improvement operator used to produce "true" solutions"""
    DESTROY_REPAIR = "destroy_repair"
    TWO_OPT = "two_opt"


class PBMode(Enum):
    """Backward policy formulation"""
    DEFAULT = "default"
    SYMMETRIC = "symmetric_pb"


class LossMode(Enum):
    """Generator objective"""
    SHAPED = "shaped"
    PLAIN = "plain"


class LogZMode(Enum):
    """Partition-function estimate"""
    CONDITIONAL = "conditional"
    SHARED = "shared"


def _parse_enum(enum_cls, value, field_name: str):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(str(value).strip().lower())
    except ValueError as e:
        choices = ", ".join(m.value for m in enum_cls)
        raise ConfigError(f"Invalid {field_name}: '{value}' (choose from {choices})") from e


@dataclass
class PolicyNetConfig:
    """Generator network sizes (d, L and the MLP head widths)"""
    hidden_dim: int = 32
    n_layers: int = 3
    mlp_hidden: List[int] = field(default_factory=lambda: [32, 16])
    seed: int = 0
    logz_mode: LogZMode = LogZMode.CONDITIONAL

    def __post_init__(self):
        self.logz_mode = _parse_enum(LogZMode, self.logz_mode, 'logz_mode')
        self.mlp_hidden = [int(w) for w in self.mlp_hidden]

    def validate(self) -> None:
        if self.hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.n_layers < 1:
            raise ConfigError(f"n_layers must be >= 1, got {self.n_layers}")
        if any(w < 1 for w in self.mlp_hidden):
            raise ConfigError(f"mlp_hidden widths must be >= 1, got {self.mlp_hidden}")


@dataclass
class DiscriminatorConfig:
    """Discriminator network sizes (d', L')"""
    hidden_dim: int = 16
    n_layers: int = 2
    mlp_hidden: List[int] = field(default_factory=lambda: [16])
    seed: int = 1

    def __post_init__(self):
        self.mlp_hidden = [int(w) for w in self.mlp_hidden]

    def validate(self) -> None:
        if self.hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.n_layers < 1:
            raise ConfigError(f"n_layers must be >= 1, got {self.n_layers}")
        if any(w < 1 for w in self.mlp_hidden):
            raise ConfigError(f"mlp_hidden widths must be >= 1, got {self.mlp_hidden}")


@dataclass
class DecodeConfig:
    """Decoding rule; test-time defaults are hybrid, P = 0.05, N = 100"""
    mode: DecodeMode = DecodeMode.HYBRID
    hybrid_p: float = 0.05
    n_rollouts: int = 100
    seed: int = 0
    temperature: float = 1.0

    def __post_init__(self):
        self.mode = _parse_enum(DecodeMode, self.mode, 'mode')

    @property
    def effective_p(self) -> float:
        """Probability of sampling (rather than taking the argmax) at each step"""
        if self.mode == DecodeMode.SAMPLE:
            return 1.0
        if self.mode == DecodeMode.GREEDY:
            return 0.0
        return self.hybrid_p

    def validate(self) -> None:
        if not 0.0 <= self.hybrid_p <= 1.0:
            raise ConfigError(f"hybrid_p must be in [0, 1], got {self.hybrid_p}")
        if self.n_rollouts < 1:
            raise ConfigError(f"n_rollouts must be >= 1, got {self.n_rollouts}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")


@dataclass
class LocalSearchConfig:
    """Destroy / repair / top-K rounds, or 2-opt"""
    rounds: int = 5
    destroy_fraction: float = 0.2
    candidates_per_round: int = 8
    top_k: int = 4
    variant: LocalSearchVariant = LocalSearchVariant.DESTROY_REPAIR
    seed: int = 0

    def __post_init__(self):
        self.variant = _parse_enum(LocalSearchVariant, self.variant, 'variant')

    def validate(self) -> None:
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 < self.destroy_fraction < 1.0:
            raise ConfigError(f"destroy_fraction must be in (0, 1), got {self.destroy_fraction}")
        if self.candidates_per_round < 1:
            raise ConfigError(f"candidates_per_round must be >= 1, got {self.candidates_per_round}")
        if not 1 <= self.top_k <= self.candidates_per_round:
            raise ConfigError(
                f"top_k must be in [1, candidates_per_round], got {self.top_k}"
            )


@dataclass
class TrainConfig:
    """Adversarial training run"""
    kind: ProblemKind = ProblemKind.TSP
    n_customers: int = 20
    instances_per_step: int = 8
    rollouts_per_instance: int = 20
    gen_steps_per_disc_step: int = 4
    total_steps: int = 500
    lr_gen: float = 1e-3
    lr_disc: float = 1e-3
    eval_every: int = 50
    eval_instances: int = 16
    eval_rollouts: int = 20
    seed: int = 0
    adversary_enabled: bool = True
    pb_mode: PBMode = PBMode.DEFAULT
    loss_mode: LossMode = LossMode.SHAPED
    reward_temperature: Optional[float] = None
    # None: AGFN_CHECKPOINT_DIR when set, else "checkpoints"
    checkpoint_dir: Optional[str] = None
    demand_low: int = 1
    demand_high: int = 9
    capacity: int = 50
    sparse_k: Optional[int] = None
    progress: bool = False
    policy: PolicyNetConfig = field(default_factory=PolicyNetConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    local_search: LocalSearchConfig = field(default_factory=LocalSearchConfig)

    def __post_init__(self):
        self.kind = ProblemKind.parse(self.kind)
        self.pb_mode = _parse_enum(PBMode, self.pb_mode, 'pb_mode')
        self.loss_mode = _parse_enum(LossMode, self.loss_mode, 'loss_mode')
        if not self.checkpoint_dir:
            self.checkpoint_dir = os.environ.get('AGFN_CHECKPOINT_DIR') or "checkpoints"

    @property
    def n_nodes(self) -> int:
        return self.n_customers + (1 if self.kind == ProblemKind.CVRP else 0)

    def validate(self) -> None:
        if self.n_customers < 2:
            raise ConfigError(f"n_customers must be >= 2, got {self.n_customers}")
        if self.instances_per_step < 1:
            raise ConfigError(f"instances_per_step must be >= 1, got {self.instances_per_step}")
        if self.rollouts_per_instance < 1:
            raise ConfigError(f"rollouts_per_instance must be >= 1, got {self.rollouts_per_instance}")
        if self.adversary_enabled and self.rollouts_per_instance < 2:
            raise ConfigError("rollouts_per_instance must be >= 2 when the adversary is enabled")
        if self.gen_steps_per_disc_step < 1:
            raise ConfigError(
                f"gen_steps_per_disc_step must be >= 1, got {self.gen_steps_per_disc_step}"
            )
        if self.total_steps < 0:
            raise ConfigError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.lr_gen <= 0 or self.lr_disc <= 0:
            raise ConfigError("learning rates must be positive")
        if self.eval_every < 1:
            raise ConfigError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.eval_instances < 1 or self.eval_rollouts < 1:
            raise ConfigError("eval_instances and eval_rollouts must be >= 1")
        if self.reward_temperature is not None and self.reward_temperature <= 0:
            raise ConfigError(f"reward_temperature must be positive, got {self.reward_temperature}")
        if self.sparse_k is not None and not 1 <= self.sparse_k <= self.n_nodes - 1:
            raise ConfigError(f"sparse_k must be in [1, {self.n_nodes - 1}], got {self.sparse_k}")
        self.policy.validate()
        self.discriminator.validate()
        self.local_search.validate()

    def to_dict(self) -> Dict[str, Any]:
        from ..parser.config_loader import dataclass_to_dict
        return dataclass_to_dict(self)
