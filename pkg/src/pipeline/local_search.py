"""Local search producing improved ("true") solutions"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from ..models import Instance, LocalSearchConfig, LocalSearchVariant, Trajectory
from ..rng import substream

logger = logging.getLogger(__name__)

# Moves must gain more than this to count as improving
IMPROVEMENT_EPS = 1e-10

Routes = List[List[int]]


def to_routes(traj: Trajectory, inst: Instance) -> Routes:
    """
    Customer sequences of a solution.

    A TSP tour is one route anchored at node 0; a CVRP solution is one route
    per depot-to-depot trip.
    """
    if inst.is_cvrp:
        return [list(r) for r in traj.routes()]
    start = traj.nodes.index(0)
    rotated = traj.nodes[start:] + traj.nodes[:start]
    return [list(rotated[1:])]


def from_routes(routes: Routes, inst: Instance) -> Trajectory:
    """Trajectory (without log-probabilities) for a list of routes"""
    if inst.is_cvrp:
        nodes = [0]
        for route in routes:
            if route:
                nodes.extend(route)
                nodes.append(0)
    else:
        nodes = [0] + list(routes[0])
    return Trajectory.from_nodes(nodes, inst)


def routes_length(routes: Routes, dist: np.ndarray) -> float:
    total = 0.0
    for route in routes:
        seq = [0] + list(route) + [0]
        total += float(dist[seq[:-1], seq[1:]].sum())
    return total


def two_opt_route(route: List[int], dist: np.ndarray) -> List[int]:
    """
    First-improvement 2-opt on one closed route through node 0.

    Repeats until no 2-exchange shortens the route.
    """
    seq = np.array([0] + list(route) + [0], dtype=np.int64)
    n = len(seq)
    improved = True
    while improved:
        improved = False
        for i in range(n - 3):
            a, b = seq[i], seq[i + 1]
            c, e = seq[i + 2:n - 1], seq[i + 3:n]
            gain = dist[a, b] + dist[c, e] - dist[a, c] - dist[b, e]
            hits = np.flatnonzero(gain > IMPROVEMENT_EPS)
            if len(hits):
                j = i + 2 + int(hits[0])
                seq[i + 1:j + 1] = seq[i + 1:j + 1][::-1].copy()
                improved = True
                break
    return seq[1:-1].tolist()


def two_opt(traj: Trajectory, inst: Instance) -> Trajectory:
    """2-opt applied to every route separately (no inter-route moves)"""
    dist = inst.distance_matrix
    routes = [two_opt_route(r, dist) for r in to_routes(traj, inst)]
    return from_routes(routes, inst)


def _insert_cheapest(routes: Routes, customer: int, inst: Instance, dist: np.ndarray) -> None:
    """
    Insert one customer where the length increase is smallest.

    Positions are scanned route by route, front to back; the first minimum
    wins. For CVRP only routes with room for the demand qualify, and opening
    a new route is considered last.
    """
    best: Optional[Tuple[float, int, int]] = None
    demand = int(inst.demands[customer]) if inst.is_cvrp else 0
    for r_idx, route in enumerate(routes):
        if inst.is_cvrp and int(inst.demands[route].sum()) + demand > inst.capacity:
            continue
        prev = np.array([0] + route, dtype=np.int64)
        nxt = np.array(route + [0], dtype=np.int64)
        delta = dist[prev, customer] + dist[customer, nxt] - dist[prev, nxt]
        pos = int(np.argmin(delta))
        if best is None or delta[pos] < best[0]:
            best = (float(delta[pos]), r_idx, pos)

    if inst.is_cvrp:
        fresh = 2.0 * dist[0, customer]
        if best is None or fresh < best[0]:
            routes.append([customer])
            return

    _, r_idx, pos = best
    routes[r_idx].insert(pos, customer)


def destroy_repair(routes: Routes, inst: Instance, fraction: float,
                   rng: np.random.Generator, dist: np.ndarray) -> Routes:
    """
    Remove a random contiguous run of customers and reinsert them cheaply.

    The run has ceil(fraction * n) customers, where n is the instance size
    (all nodes for TSP, customers for CVRP), capped at the number of
    customers. It is cut from the concatenation of all routes, so it may
    span several routes.
    """
    giant = [c for route in routes for c in route]
    n = inst.n_nodes - 1 if inst.is_cvrp else inst.n_nodes
    size = min(max(math.ceil(fraction * n), 1), len(giant))
    start = int(rng.integers(0, len(giant) - size + 1))
    removed = giant[start:start + size]
    removed_set = set(removed)

    kept = [[c for c in route if c not in removed_set] for route in routes]
    if inst.is_cvrp:
        kept = [route for route in kept if route]
    for customer in removed:
        _insert_cheapest(kept, customer, inst, dist)
    return kept


def improve(traj: Trajectory, inst: Instance, cfg: LocalSearchConfig,
            rng: Optional[np.random.Generator] = None) -> Trajectory:
    """
    Improve a feasible solution; never returns a longer one.

    destroy_repair keeps a population of the top_k solutions. Each round,
    every member spawns candidates_per_round destroy/repair candidates and
    the best top_k of members and candidates survive. two_opt runs
    first-improvement 2-opt on every route until it reaches a local optimum.

    Args:
        traj: Feasible solution
        inst: Its instance
        cfg: Local search settings
        rng: Random stream (defaults to the "local_search" substream of cfg.seed)

    Returns:
        Trajectory whose length is at most traj.length
    """
    cfg.validate()
    dist = inst.distance_matrix
    if cfg.variant == LocalSearchVariant.TWO_OPT:
        result = two_opt(traj, inst)
        return result if result.length <= traj.length else Trajectory.from_nodes(traj.nodes, inst)

    if rng is None:
        rng = substream(cfg.seed, "local_search")

    start = to_routes(traj, inst)
    population: List[Tuple[float, Routes]] = [(routes_length(start, dist), start)]
    for _round in range(cfg.rounds):
        candidates = list(population)
        for _length, parent in population:
            for _ in range(cfg.candidates_per_round):
                child = destroy_repair([list(r) for r in parent], inst, cfg.destroy_fraction, rng, dist)
                candidates.append((routes_length(child, dist), child))
        candidates.sort(key=lambda item: item[0])
        population = candidates[:cfg.top_k]

    best = from_routes(population[0][1], inst)
    if best.length > traj.length:
        return Trajectory.from_nodes(traj.nodes, inst)
    return best
