"""Sparsified k-nearest-edge graph and raw network features"""

import logging
import math
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ConfigError
from ..models import Instance, SparseGraph

logger = logging.getLogger(__name__)


def default_k(n_nodes: int) -> int:
    """max(ceil(|V| / 4), 2), capped at n - 1"""
    return max(1, min(max(math.ceil(n_nodes / 4), 2), n_nodes - 1))


def sparsify(inst: Instance, k: Optional[int] = None) -> SparseGraph:
    """
    Keep, for every node, the k outgoing edges to its nearest other nodes.

    Ties are broken by lower node index. For CVRP the edges i -> 0 and 0 -> i
    are added for every customer on top of the k-nearest set.

    Args:
        inst: Problem instance
        k: Edges per node (defaults to default_k)

    Returns:
        SparseGraph without features

    Raises:
        ConfigError: If k is outside [1, n - 1]
    """
    n = inst.n_nodes
    if k is None:
        k = default_k(n)
    if not 1 <= k <= n - 1:
        raise ConfigError(f"k must be in [1, {n - 1}], got {k}")

    src_parts: List[np.ndarray] = []
    dst_parts: List[np.ndarray] = []
    dist_parts: List[np.ndarray] = []
    for i in range(n):
        d = np.array(inst.distances_from(i), dtype=np.float64)
        d[i] = np.inf
        if inst.is_cvrp and i == 0:
            # The depot reaches every customer
            nearest = np.argsort(d, kind='stable')[:n - 1]
        else:
            nearest = np.argsort(d, kind='stable')[:k]
            if inst.is_cvrp and 0 not in nearest:
                nearest = np.append(nearest, 0)
        src_parts.append(np.full(len(nearest), i, dtype=np.int64))
        dst_parts.append(nearest.astype(np.int64))
        dist_parts.append(d[nearest])

    counts = [len(p) for p in dst_parts]
    neighbor_index = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    graph = SparseGraph(
        n_nodes=n,
        k=k,
        src=np.concatenate(src_parts),
        dst=np.concatenate(dst_parts),
        edge_dist=np.concatenate(dist_parts),
        neighbor_index=neighbor_index,
        is_cvrp=inst.is_cvrp,
    )
    logger.debug("Sparsified '%s': %d nodes, k=%d, %d edges", inst.name, n, k, graph.n_edges)
    return graph


def build_features(inst: Instance, g: SparseGraph) -> SparseGraph:
    """
    Attach raw node and edge features.

    TSP nodes: (x, y). CVRP nodes: (x, y, demand / C, is_depot). Edges:
    (distance,).
    """
    if inst.is_cvrp:
        is_depot = np.zeros(inst.n_nodes)
        is_depot[0] = 1.0
        node_feat = np.column_stack([
            inst.coords,
            inst.demands / float(inst.capacity),
            is_depot,
        ])
    else:
        node_feat = np.array(inst.coords, dtype=np.float64)
    edge_feat = g.edge_dist.reshape(-1, 1).astype(np.float64)
    return replace(g, node_feat_raw=node_feat, edge_feat_raw=edge_feat, _edge_lookup={})


def build_graph(inst: Instance, k: Optional[int] = None) -> SparseGraph:
    """sparsify followed by build_features"""
    return build_features(inst, sparsify(inst, k))


def batch_graphs(graphs: Sequence[SparseGraph]) -> SparseGraph:
    """Lay several featured graphs side by side as one disconnected graph"""
    return SparseGraph.batch(graphs)


def replicate(g: SparseGraph, copies: int) -> SparseGraph:
    """`copies` copies of one graph in a single batch"""
    return SparseGraph.batch([g] * copies)
