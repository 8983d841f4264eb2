"""Routing problem instance models"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..errors import ConfigError, InstanceError

# Dense distance matrices are only cached up to this many nodes
DENSE_CACHE_LIMIT = 2000


class ProblemKind(Enum):
    """Kind of routing problem"""
    TSP = "tsp"
    CVRP = "cvrp"

    @classmethod
    def parse(cls, value: Any) -> 'ProblemKind':
        """Parse 'tsp'/'cvrp' (any case) or an existing ProblemKind"""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as e:
            raise ConfigError(
                f"Unknown problem kind: '{value}'. Must be 'tsp' or 'cvrp'"
            ) from e


@dataclass(frozen=True, eq=False)
class Instance:
    """
    A TSP or CVRP instance.

    Node 0 is the depot for CVRP. Coordinates and demands are stored as
    read-only numpy arrays so instances can be shared between workers.
    """
    kind: ProblemKind
    coords: np.ndarray
    demands: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    capacity: int = 0
    name: str = "instance"
    tsplib_rounding: bool = False

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64).reshape(-1, 2)
        demands = np.array(self.demands, dtype=np.int64).reshape(-1)
        coords.setflags(write=False)
        demands.setflags(write=False)
        object.__setattr__(self, 'kind', ProblemKind.parse(self.kind))
        object.__setattr__(self, 'coords', coords)
        object.__setattr__(self, 'demands', demands)
        object.__setattr__(self, 'capacity', int(self.capacity))
        self._validate()

    def _validate(self) -> None:
        n = len(self.coords)
        if n < 2:
            raise InstanceError(f"Instance '{self.name}' needs at least 2 nodes, got {n}")
        if not np.all(np.isfinite(self.coords)):
            raise InstanceError(f"Instance '{self.name}' has non-finite coordinates")

        if self.kind == ProblemKind.TSP:
            if len(self.demands) != 0:
                raise InstanceError(f"TSP instance '{self.name}' must not carry demands")
            return

        if self.capacity <= 0:
            raise InstanceError(f"CVRP instance '{self.name}' needs a positive capacity")
        if len(self.demands) != n:
            raise InstanceError(
                f"CVRP instance '{self.name}' has {len(self.demands)} demands for {n} nodes"
            )
        if self.demands[0] != 0:
            raise InstanceError(f"CVRP instance '{self.name}': depot demand must be 0")
        customers = self.demands[1:]
        if np.any(customers <= 0) or np.any(customers > self.capacity):
            raise InstanceError(
                f"CVRP instance '{self.name}': customer demands must lie in "
                f"[1, {self.capacity}]"
            )

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def is_cvrp(self) -> bool:
        return self.kind == ProblemKind.CVRP

    @property
    def customers(self) -> List[int]:
        """Nodes that must be visited exactly once (all but the depot for CVRP)"""
        start = 1 if self.is_cvrp else 0
        return list(range(start, self.n_nodes))

    def _round(self, d):
        if self.tsplib_rounding:
            return np.floor(d + 0.5)
        return d

    def distance(self, i: int, j: int) -> float:
        """Euclidean distance c_ij"""
        if i == j:
            return 0.0
        dx, dy = self.coords[i] - self.coords[j]
        return float(self._round(math.hypot(dx, dy)))

    def distances_from(self, i: int) -> np.ndarray:
        """Distances from node i to every node, computed on demand"""
        if 'distance_matrix' in self.__dict__:
            return self.__dict__['distance_matrix'][i]
        diff = self.coords - self.coords[i]
        d = self._round(np.hypot(diff[:, 0], diff[:, 1]))
        d[i] = 0.0
        return d

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """Dense distance matrix (opt-in cache, n <= 2000)"""
        if self.n_nodes > DENSE_CACHE_LIMIT:
            raise InstanceError(
                f"Dense distance matrix refused for {self.n_nodes} nodes "
                f"(limit {DENSE_CACHE_LIMIT})"
            )
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        matrix = self._round(np.hypot(diff[..., 0], diff[..., 1]))
        np.fill_diagonal(matrix, 0.0)
        matrix.setflags(write=False)
        return matrix

    def route_length(self, nodes: Sequence[int], closed: bool = True) -> float:
        """Length of a node sequence; closed tours add the edge back to the start"""
        idx = np.asarray(nodes, dtype=np.int64)
        if len(idx) < 2:
            return 0.0
        if closed and idx[0] != idx[-1]:
            idx = np.append(idx, idx[0])
        diff = self.coords[idx[1:]] - self.coords[idx[:-1]]
        legs = self._round(np.hypot(diff[:, 0], diff[:, 1]))
        return float(np.sum(legs))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.name == other.name
            and self.capacity == other.capacity
            and np.array_equal(self.coords, other.coords)
            and self.tsplib_rounding == other.tsplib_rounding
            and np.array_equal(self.demands, other.demands)
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.name, self.n_nodes, self.tsplib_rounding, self.coords.tobytes()))

    def to_dict(self) -> Dict[str, Any]:
        """Native JSON representation"""
        return {
            'kind': self.kind.value,
            'name': self.name,
            'coords': self.coords.tolist(),
            'demands': self.demands.tolist(),
            'capacity': self.capacity,
            'tsplib_rounding': self.tsplib_rounding,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Instance':
        """
        Build an instance from its native JSON representation.

        Raises:
            InstanceError: If a required field is missing or invalid
        """
        for key in ('kind', 'coords'):
            if key not in data:
                raise InstanceError(f"Missing required field: '{key}'")
        try:
            return cls(
                kind=ProblemKind.parse(data['kind']),
                coords=data['coords'],
                demands=data.get('demands') or [],
                capacity=data.get('capacity') or 0,
                name=data.get('name') or 'instance',
                tsplib_rounding=bool(data.get('tsplib_rounding', False)),
            )
        except (TypeError, ValueError) as e:
            raise InstanceError(f"Error reading instance data: {str(e)}") from e


@dataclass
class GenConfig:
    """Uniform random instance distribution (demands U[a, b], capacity C)"""
    n_customers: int
    demand_low: int = 1
    demand_high: int = 9
    capacity: int = 50
    seed: int = 0

    def validate(self) -> None:
        """Raise ConfigError if the distribution is ill-defined"""
        if self.n_customers < 1:
            raise ConfigError(f"n_customers must be positive, got {self.n_customers}")
        if not 1 <= self.demand_low <= self.demand_high:
            raise ConfigError(
                f"Need 1 <= demand_low <= demand_high, got "
                f"[{self.demand_low}, {self.demand_high}]"
            )
        if self.capacity < self.demand_high:
            raise ConfigError(
                f"capacity {self.capacity} is below demand_high {self.demand_high}"
            )
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'GenConfig':
        from ..parser.config_loader import build_dataclass
        return build_dataclass(cls, data or {})
