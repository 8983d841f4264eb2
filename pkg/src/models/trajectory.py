"""Route (trajectory) models"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

from ..errors import TrajectoryError
from .instance import Instance


@dataclass
class Trajectory:
    """
    A constructed solution together with its forward log-probabilities.

    TSP: a permutation of all nodes starting at node 0 (the closing edge back
    to node 0 is implied). CVRP: customer visits interleaved with depot
    visits, starting and ending at the depot.
    """
    nodes: List[int]
    step_logp: List[float] = field(default_factory=list)
    length: float = 0.0
    instance_id: str = ""

    @property
    def log_prob(self) -> float:
        """log P_F(tau) as recorded during construction"""
        return float(math.fsum(self.step_logp))

    def routes(self) -> List[List[int]]:
        """Customer sequences between depot visits (the whole tour for TSP)"""
        if not self.nodes or self.nodes[0] != 0 or len(self.nodes) < 2 or self.nodes[-1] != 0:
            return [list(self.nodes)]
        routes = []
        current: List[int] = []
        for node in self.nodes[1:]:
            if node == 0:
                if current:
                    routes.append(current)
                current = []
            else:
                current.append(node)
        return routes

    def validate(self, instance: Instance) -> None:
        """
        Check the feasibility invariants for the given instance.

        Raises:
            TrajectoryError: If the route is not a feasible solution
        """
        n = instance.n_nodes
        if any(not 0 <= v < n for v in self.nodes):
            raise TrajectoryError(f"Route for '{instance.name}' references unknown nodes")

        if not instance.is_cvrp:
            if sorted(self.nodes) != list(range(n)):
                raise TrajectoryError(
                    f"TSP route for '{instance.name}' is not a permutation of {n} nodes"
                )
            return

        if len(self.nodes) < 2 or self.nodes[0] != 0 or self.nodes[-1] != 0:
            raise TrajectoryError(f"CVRP route for '{instance.name}' must start and end at the depot")
        for a, b in zip(self.nodes, self.nodes[1:]):
            if a == 0 and b == 0:
                raise TrajectoryError(f"CVRP route for '{instance.name}' has an empty tour")
        visits = [v for v in self.nodes if v != 0]
        if sorted(visits) != list(range(1, n)):
            raise TrajectoryError(
                f"CVRP route for '{instance.name}' must visit each customer exactly once"
            )
        for route in self.routes():
            load = int(sum(instance.demands[v] for v in route))
            if load > instance.capacity:
                raise TrajectoryError(
                    f"CVRP route for '{instance.name}' carries {load} > capacity {instance.capacity}"
                )

    def is_feasible(self, instance: Instance) -> bool:
        try:
            self.validate(instance)
        except TrajectoryError:
            return False
        return True

    @classmethod
    def from_nodes(cls, nodes: List[int], instance: Instance) -> 'Trajectory':
        """Build a trajectory (without log-probabilities) and measure its length"""
        nodes = [int(v) for v in nodes]
        return cls(
            nodes=nodes,
            length=instance.route_length(nodes),
            instance_id=instance.name,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Solution export format {instance, nodes, length}"""
        return {
            'instance': self.instance_id,
            'nodes': list(self.nodes),
            'length': self.length,
        }
