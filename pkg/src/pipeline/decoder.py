"""Route construction from an edge heatmap"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from ..errors import TrajectoryError
from ..models import DecodeConfig, DecodeMode, Instance, SparseGraph, Trajectory
from ..network.policy_net import Heatmap
from ..rng import substream

logger = logging.getLogger(__name__)

# Smallest score fed to log(); sigmoid outputs only reach it on overflow
SCORE_FLOOR = 1e-300

HeatmapLike = Union[Heatmap, np.ndarray]


def _scores(heatmap: HeatmapLike) -> np.ndarray:
    if isinstance(heatmap, Heatmap):
        return heatmap.values
    return np.asarray(heatmap, dtype=np.float64).reshape(-1)


class RouteState:
    """
    Partial route: the current node, what has been visited and the load left.

    TSP routes start at node 0. CVRP routes start at the depot with a full
    vehicle; returning to the depot refills it.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.current = 0
        self.nodes: List[int] = [0]
        self.visited = np.zeros(instance.n_nodes, dtype=bool)
        self.visited[0] = True
        self.remaining = instance.capacity
        self.unvisited = instance.n_nodes - 1

    @property
    def done(self) -> bool:
        if self.unvisited > 0:
            return False
        return not self.instance.is_cvrp or self.current == 0

    def advance(self, node: int) -> None:
        node = int(node)
        if self.instance.is_cvrp and node == 0:
            self.remaining = self.instance.capacity
        else:
            if self.visited[node]:
                raise TrajectoryError(f"Node {node} visited twice in '{self.instance.name}'")
            self.visited[node] = True
            self.unvisited -= 1
            if self.instance.is_cvrp:
                self.remaining -= int(self.instance.demands[node])
        self.current = node
        self.nodes.append(node)

    def feasible_customers(self) -> np.ndarray:
        """Boolean mask of unvisited customers that fit the remaining load"""
        mask = ~self.visited
        if self.instance.is_cvrp:
            mask = mask & (self.instance.demands <= self.remaining)
            mask[0] = False
        return mask


@dataclass
class ActionSet:
    """
    Candidate next nodes.

    edge_ids holds the sparse edge of every candidate; it is None when the
    distance-based fallback is in use.
    """
    nodes: np.ndarray
    edge_ids: Optional[np.ndarray]

    @property
    def is_fallback(self) -> bool:
        return self.edge_ids is None

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass
class StepDistribution:
    """Normalized distribution over an ActionSet"""
    actions: ActionSet
    probs: np.ndarray
    log_probs: np.ndarray

    def argmax(self) -> int:
        """Position of the most likely action (ties -> lowest node index)"""
        best = self.log_probs.max()
        tied = np.flatnonzero(self.log_probs == best)
        return int(tied[np.argmin(self.actions.nodes[tied])])


def feasible_actions(state: RouteState, g: SparseGraph) -> ActionSet:
    """
    Feasible next nodes from the current state.

    Sparse out-neighbours that are feasible customers, plus the depot when the
    vehicle is away from it (CVRP). When no sparse neighbour is a feasible
    customer but feasible customers exist, every feasible customer (and the
    depot) is offered without edges. When no customer is feasible the depot is
    the only action.

    Raises:
        TrajectoryError: If the state has no successor at all
    """
    inst = state.instance
    feasible = state.feasible_customers()
    away = inst.is_cvrp and state.current != 0

    edge_ids = g.out_edges(state.current)
    neighbors = g.dst[edge_ids]
    keep = feasible[neighbors]
    if away:
        keep = keep | (neighbors == 0)

    if feasible[neighbors].any():
        return ActionSet(nodes=neighbors[keep], edge_ids=edge_ids[keep])

    if feasible.any():
        nodes = np.flatnonzero(feasible)
        if away:
            nodes = np.concatenate([[0], nodes])
        return ActionSet(nodes=nodes.astype(np.int64), edge_ids=None)

    if away:
        depot_edge = edge_ids[neighbors == 0]
        if len(depot_edge):
            return ActionSet(nodes=np.array([0], dtype=np.int64), edge_ids=depot_edge[:1])
        return ActionSet(nodes=np.array([0], dtype=np.int64), edge_ids=None)

    raise TrajectoryError(
        f"No feasible action from node {state.current} in '{inst.name}' "
        f"with {state.unvisited} nodes unvisited"
    )


def log_normalize(logits: np.ndarray) -> np.ndarray:
    """log-softmax of a 1-D array"""
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


def step_distribution(state: RouteState, heatmap: HeatmapLike, g: SparseGraph,
                      temperature: float = 1.0) -> StepDistribution:
    """
    Masked, renormalized next-node distribution.

    Sparse actions get probability proportional to score ** (1 / temperature);
    fallback actions get probability proportional to exp(-distance / temperature).
    """
    actions = feasible_actions(state, g)
    if actions.is_fallback:
        dist = state.instance.distances_from(state.current)[actions.nodes]
        logits = -dist / temperature
    else:
        scores = np.maximum(_scores(heatmap)[actions.edge_ids], SCORE_FLOOR)
        logits = np.log(scores) / temperature
    log_probs = log_normalize(logits)
    return StepDistribution(actions=actions, probs=np.exp(log_probs), log_probs=log_probs)


def rollout(inst: Instance, g: SparseGraph, heatmap: HeatmapLike, cfg: DecodeConfig,
            rng: Optional[np.random.Generator] = None) -> Trajectory:
    """
    Construct one route with the hybrid rule.

    At every step a coin with bias P decides between sampling from the step
    distribution and taking its argmax; `sample` forces P = 1 and `greedy`
    P = 0. The log-probability of the chosen node is recorded either way.
    """
    p = cfg.effective_p
    if rng is None:
        rng = substream(cfg.seed, "rollout", 0)

    state = RouteState(inst)
    step_logp: List[float] = []
    while not state.done:
        dist = step_distribution(state, heatmap, g, cfg.temperature)
        if p >= 1.0:
            sample = True
        elif p <= 0.0:
            sample = False
        else:
            sample = rng.random() < p

        if len(dist.actions) == 1:
            choice = 0
        elif sample:
            choice = int(rng.choice(len(dist.probs), p=dist.probs))
        else:
            choice = dist.argmax()

        state.advance(int(dist.actions.nodes[choice]))
        step_logp.append(float(dist.log_probs[choice]))

    nodes = state.nodes
    return Trajectory(
        nodes=nodes,
        step_logp=step_logp,
        length=inst.route_length(nodes),
        instance_id=inst.name,
    )


@dataclass
class DecodeResult:
    """All rollouts of one instance and the shortest of them"""
    trajectories: List[Trajectory] = field(default_factory=list)

    @property
    def best(self) -> Trajectory:
        return min(self.trajectories, key=lambda t: t.length)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([t.length for t in self.trajectories])


def decode_batch(inst: Instance, g: SparseGraph, heatmap: HeatmapLike,
                 cfg: DecodeConfig) -> DecodeResult:
    """
    N independent rollouts (a single one in greedy mode).

    Rollout i draws from its own stream derived from (cfg.seed, i), so the
    result does not depend on how rollouts are scheduled.
    """
    cfg.validate()
    n_rollouts = 1 if cfg.mode == DecodeMode.GREEDY else cfg.n_rollouts
    result = DecodeResult()
    for i in range(n_rollouts):
        result.trajectories.append(
            rollout(inst, g, heatmap, cfg, rng=substream(cfg.seed, "rollout", i))
        )
    return result


@dataclass
class ReplayStep:
    """One decision of a finished route: where it stood, what it could pick, what it picked"""
    source: int
    actions: ActionSet
    position: int

    @property
    def forced(self) -> bool:
        return len(self.actions) == 1


def replay(inst: Instance, g: SparseGraph, nodes: List[int]) -> List[ReplayStep]:
    """
    Recompute the action set of every decision along a finished route.

    Raises:
        TrajectoryError: If the route does not start at node 0, takes a step
            outside its action set or stops early
    """
    if not nodes or nodes[0] != 0:
        raise TrajectoryError(f"Route for '{inst.name}' must start at node 0")
    state = RouteState(inst)
    steps: List[ReplayStep] = []
    for node in nodes[1:]:
        actions = feasible_actions(state, g)
        hits = np.flatnonzero(actions.nodes == node)
        if len(hits) == 0:
            raise TrajectoryError(
                f"Route for '{inst.name}' takes infeasible step {state.current} -> {node}"
            )
        steps.append(ReplayStep(source=state.current, actions=actions, position=int(hits[0])))
        state.advance(node)
    if not state.done:
        raise TrajectoryError(f"Route for '{inst.name}' is incomplete")
    return steps
