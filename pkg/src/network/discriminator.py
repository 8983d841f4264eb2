"""Solution discriminator"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..autodiff import ParameterStore, Tensor, constant, ops
from ..errors import ConfigError
from ..models import DiscriminatorConfig, Instance, ProblemKind, SparseGraph, Trajectory
from ..models.graph import EDGE_FEATURES
from ..rng import substream
from .gnn import MLP, GatedGNN, check_architecture
from .policy_net import INFER, TRAIN, node_feature_width

logger = logging.getLogger(__name__)


@dataclass
class LabeledSolutionSet:
    """
    Locally improved solutions ("true") and raw generator solutions ("false").

    Trajectories refer to their instance by instance_id; the matching
    instance and sparse graph are looked up in `instances` and `graphs`.
    """
    true_set: List[Trajectory] = field(default_factory=list)
    false_set: List[Trajectory] = field(default_factory=list)
    instances: Dict[str, Instance] = field(default_factory=dict)
    graphs: Dict[str, SparseGraph] = field(default_factory=dict)

    def add_instance(self, inst: Instance, g: SparseGraph) -> None:
        self.instances[inst.name] = inst
        self.graphs[inst.name] = g

    def __len__(self) -> int:
        return len(self.true_set) + len(self.false_set)

    def validate(self) -> None:
        """
        Raises:
            TrajectoryError: If any solution is infeasible for its instance
        """
        for traj in self.true_set + self.false_set:
            traj.validate(self.instances[traj.instance_id])


def _used_edges(traj: Trajectory, g: SparseGraph) -> np.ndarray:
    """Sparse edge ids whose undirected pair appears consecutively in the route"""
    nodes = traj.nodes
    if len(nodes) < 2:
        return np.zeros(0, dtype=np.int64)
    closed = list(nodes) if nodes[-1] == nodes[0] else list(nodes) + [nodes[0]]
    used = set()
    for a, b in zip(closed, closed[1:]):
        for s, d in ((a, b), (b, a)):
            edge = g.edge_id(s, d)
            if edge is not None:
                used.add(edge)
    return np.array(sorted(used), dtype=np.int64)


def _positions(traj: Trajectory, n_nodes: int) -> np.ndarray:
    """First position of each node in the route, scaled to [0, 1]"""
    pos = np.zeros(n_nodes)
    seen = np.zeros(n_nodes, dtype=bool)
    scale = max(len(traj.nodes) - 1, 1)
    for idx, node in enumerate(traj.nodes):
        if not seen[node]:
            seen[node] = True
            pos[node] = idx / scale
    return pos


class Discriminator:
    """
    Scores complete solutions in (0, 1).

    Encodes the instance graph with its own gated GNN, where each node also
    sees its normalized position in the route and each edge a "used by the
    route" flag. Mean-pooled node embeddings and mean-pooled used-edge
    embeddings go through an MLP ending in a sigmoid.
    """

    def __init__(self, cfg: DiscriminatorConfig, node_feat_width: int,
                 edge_feat_width: int = EDGE_FEATURES):
        cfg.validate()
        self.cfg = cfg
        self.node_in = node_feat_width + 1
        self.edge_in = edge_feat_width + 1
        self.encoder = GatedGNN(cfg.hidden_dim, cfg.n_layers, self.node_in, self.edge_in)
        self.head = MLP(2 * cfg.hidden_dim, cfg.mlp_hidden, 1, prefix="head")

    @classmethod
    def for_kind(cls, cfg: DiscriminatorConfig, kind: ProblemKind) -> 'Discriminator':
        return cls(cfg, node_feature_width(kind))

    @property
    def architecture(self) -> Dict[str, Any]:
        return {
            'net': 'discriminator',
            'hidden_dim': self.cfg.hidden_dim,
            'n_layers': self.cfg.n_layers,
            'mlp_hidden': list(self.cfg.mlp_hidden),
            'node_in': self.node_in,
            'edge_in': self.edge_in,
        }

    def init_params(self) -> ParameterStore:
        store = ParameterStore(meta=self.architecture)
        rng = substream(self.cfg.seed, "init", "discriminator")
        self.encoder.init(store, rng)
        self.head.init(store, rng)
        return store

    def check(self, store: ParameterStore) -> None:
        check_architecture(store, self.architecture, "Discriminator")

    def featurize(self, items: Sequence[Tuple[Trajectory, SparseGraph]]
                  ) -> Tuple[SparseGraph, List[np.ndarray]]:
        """
        Build one batched graph with a copy of the instance graph per solution.

        Returns:
            (batched graph with augmented features, used edge ids per member)
        """
        members = []
        used_parts = []
        for traj, g in items:
            used = _used_edges(traj, g)
            flag = np.zeros((g.n_edges, 1))
            flag[used] = 1.0
            members.append(SparseGraph(
                n_nodes=g.n_nodes,
                k=g.k,
                src=g.src,
                dst=g.dst,
                edge_dist=g.edge_dist,
                neighbor_index=g.neighbor_index,
                node_feat_raw=np.column_stack([g.node_feat_raw, _positions(traj, g.n_nodes)]),
                edge_feat_raw=np.column_stack([g.edge_feat_raw, flag]),
                is_cvrp=g.is_cvrp,
            ))
            used_parts.append(used)
        return SparseGraph.batch(members), used_parts

    def forward(self, items: Sequence[Tuple[Trajectory, SparseGraph]], params: ParameterStore,
                mode: str = INFER) -> Tensor:
        """
        Score a batch of solutions.

        Args:
            items: (trajectory, featured instance graph) pairs
            params: Discriminator parameter store
            mode: "train" or "infer"

        Returns:
            (len(items), 1) tensor of scores in (0, 1)
        """
        if not items:
            raise ConfigError("discriminator needs at least one solution")
        batch, used_parts = self.featurize(items)
        h, e = self.encoder.forward(
            params,
            batch.node_feat_raw,
            batch.edge_feat_raw,
            batch.src,
            batch.dst,
            batch.neighbor_index,
            training=(mode == TRAIN),
        )
        node_pool = ops.mean_aggregate(h, batch.node_offsets)

        used_ids = np.concatenate(
            [used + batch.edge_offsets[m] for m, used in enumerate(used_parts)]
        ).astype(np.int64)
        used_offsets = np.concatenate([[0], np.cumsum([len(u) for u in used_parts])]).astype(np.int64)
        edge_pool = ops.mean_aggregate(ops.gather(e, used_ids), used_offsets)

        return self.head.forward(params, ops.concat([node_pool, edge_pool], axis=1))


def score_batch(net: Discriminator, trajectories: Sequence[Trajectory], g: SparseGraph,
                params: ParameterStore) -> np.ndarray:
    """Inference-mode scores of several solutions of one instance, as constants"""
    scores = net.forward([(t, g) for t in trajectories], params, mode=INFER)
    return scores.data[:, 0].copy()


def score(net: Discriminator, traj: Trajectory, inst: Instance, g: SparseGraph,
          params: ParameterStore) -> float:
    """
    Score one feasible solution.

    Raises:
        TrajectoryError: If the solution is infeasible for inst
    """
    traj.validate(inst)
    return float(score_batch(net, [traj], g, params)[0])


def disc_loss(net: Discriminator, sets: LabeledSolutionSet, params: ParameterStore,
              mode: str = TRAIN) -> Tensor:
    """
    Mean squared distance of scores to their labels.

    (1 / (M + N)) * (sum over true (1 - S)^2 + sum over false S^2). Solution
    features are constants, so no gradient reaches the generator.
    """
    if len(sets) == 0:
        raise ConfigError("disc_loss needs at least one labeled solution")
    items = [(t, sets.graphs[t.instance_id]) for t in sets.true_set]
    items += [(t, sets.graphs[t.instance_id]) for t in sets.false_set]
    labels = np.concatenate([np.ones(len(sets.true_set)), np.zeros(len(sets.false_set))])
    scores = net.forward(items, params, mode=mode)
    return ops.mean_reduce(ops.square(ops.sub(scores, constant(labels))))
