"""Sparse graph model"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

TSP_NODE_FEATURES = 2    # (x, y)
CVRP_NODE_FEATURES = 4   # (x, y, demand / C, is_depot)
EDGE_FEATURES = 1        # (distance,)


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """
    Directed graph G* with edges sorted by source node.

    Edges of node i are src[neighbor_index[i]:neighbor_index[i + 1]]. A graph
    may hold several member graphs side by side (see batch_graphs); their
    node and edge ranges are given by node_offsets and edge_offsets.
    """
    n_nodes: int
    k: int
    src: np.ndarray
    dst: np.ndarray
    edge_dist: np.ndarray
    neighbor_index: np.ndarray
    node_feat_raw: Optional[np.ndarray] = None
    edge_feat_raw: Optional[np.ndarray] = None
    is_cvrp: bool = False
    node_offsets: Optional[np.ndarray] = None
    edge_offsets: Optional[np.ndarray] = None
    _edge_lookup: Dict[Tuple[int, int], int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.node_offsets is None:
            object.__setattr__(self, 'node_offsets', np.array([0, self.n_nodes], dtype=np.int64))
        if self.edge_offsets is None:
            object.__setattr__(self, 'edge_offsets', np.array([0, self.n_edges], dtype=np.int64))

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def n_members(self) -> int:
        return len(self.node_offsets) - 1

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    @property
    def has_features(self) -> bool:
        return self.node_feat_raw is not None and self.edge_feat_raw is not None

    def out_edges(self, node: int) -> np.ndarray:
        """Edge ids leaving node, in k-nearest order"""
        return np.arange(self.neighbor_index[node], self.neighbor_index[node + 1])

    def neighbors(self, node: int) -> np.ndarray:
        return self.dst[self.neighbor_index[node]:self.neighbor_index[node + 1]]

    def edge_id(self, src: int, dst: int) -> Optional[int]:
        """Id of the directed edge src -> dst, or None when it was sparsified away"""
        if not self._edge_lookup:
            self._edge_lookup.update(
                {(int(s), int(d)): e for e, (s, d) in enumerate(zip(self.src, self.dst))}
            )
        return self._edge_lookup.get((int(src), int(dst)))

    @classmethod
    def batch(cls, graphs: Sequence['SparseGraph']) -> 'SparseGraph':
        """
        Lay several featured graphs side by side as one disconnected graph.

        Node ids of member m are shifted by node_offsets[m]; edge ids by
        edge_offsets[m].
        """
        if not graphs:
            raise ValueError("batch needs at least one graph")
        node_offsets = np.concatenate([[0], np.cumsum([g.n_nodes for g in graphs])]).astype(np.int64)
        edge_offsets = np.concatenate([[0], np.cumsum([g.n_edges for g in graphs])]).astype(np.int64)

        neighbor_parts = [graphs[0].neighbor_index[:1]]
        for m, g in enumerate(graphs):
            neighbor_parts.append(g.neighbor_index[1:] + edge_offsets[m])

        return cls(
            n_nodes=int(node_offsets[-1]),
            k=graphs[0].k,
            src=np.concatenate([g.src + node_offsets[m] for m, g in enumerate(graphs)]),
            dst=np.concatenate([g.dst + node_offsets[m] for m, g in enumerate(graphs)]),
            edge_dist=np.concatenate([g.edge_dist for g in graphs]),
            neighbor_index=np.concatenate(neighbor_parts).astype(np.int64),
            node_feat_raw=np.concatenate([g.node_feat_raw for g in graphs], axis=0),
            edge_feat_raw=np.concatenate([g.edge_feat_raw for g in graphs], axis=0),
            is_cvrp=graphs[0].is_cvrp,
            node_offsets=node_offsets,
            edge_offsets=edge_offsets,
        )
