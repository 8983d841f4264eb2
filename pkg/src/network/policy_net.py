"""Generator network: gated GNN encoder and edge heatmap head"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from ..autodiff import ParameterStore, Tensor, ops
from ..errors import ConfigError
from ..models import PolicyNetConfig, ProblemKind, SparseGraph
from ..models.graph import CVRP_NODE_FEATURES, EDGE_FEATURES, TSP_NODE_FEATURES
from ..rng import substream
from .gnn import MLP, GatedGNN, check_architecture

logger = logging.getLogger(__name__)

TRAIN = "train"
INFER = "infer"


@dataclass
class Heatmap:
    """
    Per-directed-edge scores in (0, 1), aligned with graph.src / graph.dst.

    `scores` stays attached to the tape when produced in training mode, so
    the loss can differentiate through it.
    """
    graph: SparseGraph
    scores: Tensor

    @property
    def values(self) -> np.ndarray:
        return self.scores.data[:, 0]

    def split(self, graphs: Sequence[SparseGraph]) -> List['Heatmap']:
        """Per-member heatmaps of a batched graph (scores stay differentiable)"""
        offsets = self.graph.edge_offsets
        return [
            Heatmap(graph=g, scores=ops.gather(self.scores, np.arange(offsets[m], offsets[m + 1])))
            for m, g in enumerate(graphs)
        ]

    def triples(self) -> List[Tuple[int, int, float]]:
        return [
            (int(s), int(d), float(v))
            for s, d, v in zip(self.graph.src, self.graph.dst, self.values)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {'n_nodes': self.graph.n_nodes, 'edges': [list(t) for t in self.triples()]}

    def dump(self, path: Union[str, Path]) -> Path:
        """Debug dump: JSON {n_nodes, edges: [[src, dst, score], ...]}"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f)
        return path


def node_feature_width(kind: ProblemKind) -> int:
    return CVRP_NODE_FEATURES if ProblemKind.parse(kind) == ProblemKind.CVRP else TSP_NODE_FEATURES


class PolicyNet:
    """
    The generator network eta(G*, theta).

    Parameters live in a ParameterStore so that the same PolicyNet object can
    run against a training store, a read-only snapshot or a loaded checkpoint.
    """

    def __init__(self, cfg: PolicyNetConfig, node_feat_width: int,
                 edge_feat_width: int = EDGE_FEATURES):
        cfg.validate()
        self.cfg = cfg
        self.node_feat_width = node_feat_width
        self.edge_feat_width = edge_feat_width
        self.encoder = GatedGNN(cfg.hidden_dim, cfg.n_layers, node_feat_width, edge_feat_width)
        self.head = MLP(3 * cfg.hidden_dim, cfg.mlp_hidden, 1, prefix="head")

    @classmethod
    def for_kind(cls, cfg: PolicyNetConfig, kind: ProblemKind) -> 'PolicyNet':
        return cls(cfg, node_feature_width(kind))

    @property
    def architecture(self) -> Dict[str, Any]:
        return {
            'net': 'policy',
            'hidden_dim': self.cfg.hidden_dim,
            'n_layers': self.cfg.n_layers,
            'mlp_hidden': list(self.cfg.mlp_hidden),
            'node_in': self.node_feat_width,
            'edge_in': self.edge_feat_width,
        }

    def init_params(self) -> ParameterStore:
        """Seeded uniform(+-1/sqrt(fan_in)) initialization of every parameter"""
        store = ParameterStore(meta=self.architecture)
        rng = substream(self.cfg.seed, "init", "policy")
        self.encoder.init(store, rng)
        self.head.init(store, rng)
        logger.debug("Policy network initialized with %d parameters", store.n_parameters())
        return store

    def check(self, store: ParameterStore) -> None:
        """Raise CheckpointError when a store was built for another architecture"""
        check_architecture(store, self.architecture, "Policy network")

    def embed(self, g: SparseGraph, params: ParameterStore, mode: str = INFER) -> Tuple[Tensor, Tensor]:
        """Final node and edge embeddings"""
        return self.encoder.forward(
            params,
            g.node_feat_raw,
            g.edge_feat_raw,
            g.src,
            g.dst,
            g.neighbor_index,
            training=(mode == TRAIN),
        )

    def forward_with_embeddings(self, g: SparseGraph, params: ParameterStore,
                                mode: str = INFER) -> Tuple[Heatmap, Tensor]:
        """Heatmap plus the final node embeddings (used by the log Z head)"""
        if not g.has_features:
            raise ConfigError("graph has no features; call build_features first")
        h, e = self.embed(g, params, mode)
        head_in = ops.concat([e, ops.gather(h, g.src), ops.gather(h, g.dst)], axis=1)
        scores = self.head.forward(params, head_in)
        return Heatmap(graph=g, scores=scores), h

    def forward(self, g: SparseGraph, params: ParameterStore, mode: str = INFER) -> Heatmap:
        """
        Compute the edge heatmap.

        Args:
            g: Featured sparse graph (single or batched)
            params: Parameter store created by init_params
            mode: "train" (batch statistics, updates running stats) or "infer"

        Returns:
            Heatmap aligned with g's edges, every score in (0, 1)
        """
        heatmap, _ = self.forward_with_embeddings(g, params, mode)
        return heatmap

