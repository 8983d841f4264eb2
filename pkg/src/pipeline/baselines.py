"""Reference solvers and gap reporting"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..autodiff import DomainError
from ..errors import InstanceError
from ..models import GapReport, Instance, Trajectory
from ..parser.reference_loader import ReferenceLoader
from .local_search import from_routes, to_routes, two_opt_route

logger = logging.getLogger(__name__)

# Largest TSP solved exactly; the DP table has 2^(n-1) * (n-1) entries
HELD_KARP_MAX_NODES = 14


def nearest_neighbor(inst: Instance) -> Trajectory:
    """
    Greedy construction: always move to the nearest feasible unvisited customer.

    Starts at node 0. For CVRP the vehicle returns to the depot whenever no
    unvisited customer fits the remaining load. Ties go to the lowest index.
    """
    visited = np.zeros(inst.n_nodes, dtype=bool)
    visited[0] = True
    nodes = [0]
    current = 0
    remaining = inst.capacity

    while not visited.all():
        mask = ~visited
        if inst.is_cvrp:
            mask &= inst.demands <= remaining
        if not mask.any():
            # CVRP only: nothing fits, go back and refill
            nodes.append(0)
            current = 0
            remaining = inst.capacity
            continue
        dist = np.where(mask, inst.distances_from(current), np.inf)
        nxt = int(np.argmin(dist))
        visited[nxt] = True
        nodes.append(nxt)
        current = nxt
        if inst.is_cvrp:
            remaining -= int(inst.demands[nxt])

    if inst.is_cvrp:
        nodes.append(0)
    return Trajectory.from_nodes(nodes, inst)


def nearest_neighbor_two_opt(inst: Instance) -> Trajectory:
    """nearest_neighbor followed by 2-opt on every route"""
    dist = inst.distance_matrix
    start = nearest_neighbor(inst)
    routes = [two_opt_route(r, dist) for r in to_routes(start, inst)]
    return from_routes(routes, inst)


def held_karp(inst: Instance) -> float:
    """
    Exact optimal TSP tour length by bitmask dynamic programming.

    dp[S, j] is the shortest path from node 0 through the node set S that
    ends at j (nodes 1..n-1 are bits 0..n-2).

    Raises:
        InstanceError: For CVRP instances or more than HELD_KARP_MAX_NODES nodes
    """
    if inst.is_cvrp:
        raise InstanceError("held_karp only solves TSP instances")
    n = inst.n_nodes
    if n > HELD_KARP_MAX_NODES:
        raise InstanceError(
            f"held_karp refuses {n} nodes (limit {HELD_KARP_MAX_NODES})"
        )

    d = inst.distance_matrix
    if n == 2:
        return float(d[0, 1] + d[1, 0])

    m = n - 1
    inner = d[1:, 1:]
    bits = 1 << np.arange(m)
    dp = np.full((1 << m, m), np.inf)
    dp[bits, np.arange(m)] = d[0, 1:]

    for mask in range(1, 1 << m):
        members = (mask & bits) != 0
        if members.sum() < 2:
            continue
        # prev[j, i] = dp[mask without j, i]; step i -> j costs inner[i, j]
        prev = dp[mask ^ bits]
        best = (prev + inner.T).min(axis=1)
        dp[mask] = np.where(members, best, np.inf)

    full = (1 << m) - 1
    return float((dp[full] + d[1:, 0]).min())


def gap_pct(objective: float, reference: float) -> float:
    """
    (objective - reference) / reference * 100

    Raises:
        DomainError: If the reference is 0
    """
    if reference == 0:
        raise DomainError("gap is undefined against a zero reference objective")
    return (objective - reference) / reference * 100.0


def gap_report(objectives: Mapping[str, Sequence[float]], reference: str) -> GapReport:
    """
    Compare several methods instance by instance against a reference method.

    Args:
        objectives: Method name -> objective per instance (same instance order)
        reference: Name of the reference method (a key of objectives)

    Returns:
        GapReport; the mean gap is computed on the mean objectives

    Raises:
        DomainError: If the reference is missing, sizes differ or a reference objective is 0
    """
    if reference not in objectives:
        raise DomainError(f"Reference method '{reference}' has no objectives")
    ref = np.asarray(objectives[reference], dtype=np.float64)
    if np.any(ref == 0):
        raise DomainError("gap is undefined against a zero reference objective")

    values: Dict[str, List[float]] = {}
    gaps: Dict[str, List[float]] = {}
    mean_objective: Dict[str, float] = {}
    mean_gap: Dict[str, float] = {}
    ref_mean = float(ref.mean()) if len(ref) else 0.0

    for method, objs in objectives.items():
        objs = np.asarray(objs, dtype=np.float64)
        if objs.shape != ref.shape:
            raise DomainError(
                f"Method '{method}' has {len(objs)} objectives, reference has {len(ref)}"
            )
        values[method] = objs.tolist()
        gaps[method] = ((objs - ref) / ref * 100.0).tolist()
        if len(objs):
            mean_objective[method] = float(objs.mean())
            mean_gap[method] = gap_pct(mean_objective[method], ref_mean)
        else:
            mean_objective[method] = float('nan')
            mean_gap[method] = float('nan')

    return GapReport(
        reference=reference,
        objectives=values,
        gaps=gaps,
        mean_objective=mean_objective,
        mean_gap=mean_gap,
    )


def run_baselines(instances: Sequence[Instance], exact: Optional[bool] = None) -> Dict[str, List[float]]:
    """
    Objectives of every baseline on every instance.

    Held-Karp is included when exact is True, or when exact is None and
    every instance is a TSP small enough for it.
    """
    if exact is None:
        exact = bool(instances) and all(
            not inst.is_cvrp and inst.n_nodes <= HELD_KARP_MAX_NODES for inst in instances
        )
    results: Dict[str, List[float]] = {'nearest_neighbor': [], 'nearest_neighbor_2opt': []}
    if exact:
        results['held_karp'] = []
    for inst in instances:
        results['nearest_neighbor'].append(nearest_neighbor(inst).length)
        results['nearest_neighbor_2opt'].append(nearest_neighbor_two_opt(inst).length)
        if exact:
            results['held_karp'].append(held_karp(inst))
    logger.info("Baselines computed for %d instances", len(instances))
    return results


def load_reference_results(path=None) -> ReferenceLoader:
    """Loaded view of the transcribed published results"""
    loader = ReferenceLoader(path)
    loader.load()
    return loader
