"""Solve engine - decodes instances with a trained policy checkpoint"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..autodiff import ParameterStore, load_checkpoint
from ..errors import CheckpointError
from ..models import DecodeConfig, Instance, PolicyNetConfig, ProblemKind, Trajectory
from ..network.policy_net import INFER, Heatmap, PolicyNet
from .decoder import DecodeResult, decode_batch
from .sparse_graph import build_graph

logger = logging.getLogger(__name__)


class Solver:
    """
    Main solve engine.

    Wraps a policy network and its parameters; every call builds the sparse
    graph of the instance, computes one heatmap and decodes it.
    """

    def __init__(self, policy: PolicyNet, params: ParameterStore, kind: ProblemKind,
                 sparse_k: Optional[int] = None):
        """
        Initialize solver.

        Args:
            policy: Policy network matching params
            params: Trained generator parameters
            kind: Problem kind the policy was trained on
            sparse_k: Sparsification k (None: default for the instance size)
        """
        policy.check(params)
        self.policy = policy
        self.params = params
        self.kind = kind
        self.sparse_k = sparse_k

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path]) -> 'Solver':
        """
        Load the policy of a training checkpoint.

        Raises:
            CheckpointError: If the file is missing, corrupt or holds no policy
        """
        stores, extra = load_checkpoint(path)
        if 'policy' not in stores:
            raise CheckpointError(f"{path} holds no policy parameters")
        params = stores['policy']
        meta = params.meta
        try:
            cfg = PolicyNetConfig(
                hidden_dim=int(meta['hidden_dim']),
                n_layers=int(meta['n_layers']),
                mlp_hidden=list(meta['mlp_hidden']),
            )
            policy = PolicyNet(cfg, int(meta['node_in']), int(meta['edge_in']))
            kind = ProblemKind.parse(extra['kind'])
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"Checkpoint {path} lacks architecture metadata: {str(e)}") from e

        sparse_k = (extra.get('config') or {}).get('sparse_k')
        logger.info("Loaded %s policy from %s (%d parameters)", kind.value, path, params.n_parameters())
        return cls(policy, params, kind, sparse_k)

    def heatmap(self, inst: Instance) -> Tuple[Heatmap, Any]:
        """Inference-mode heatmap and the graph it is aligned with"""
        if inst.kind != self.kind:
            raise CheckpointError(
                f"Checkpoint was trained on {self.kind.value}, "
                f"instance '{inst.name}' is {inst.kind.value}"
            )
        k = self.sparse_k if self.sparse_k is not None and self.sparse_k < inst.n_nodes else None
        g = build_graph(inst, k)
        return self.policy.forward(g, self.params, INFER), g

    def decode(self, inst: Instance, cfg: DecodeConfig) -> DecodeResult:
        """All rollouts of one instance"""
        heatmap, g = self.heatmap(inst)
        return decode_batch(inst, g, heatmap, cfg)

    def solve(self, inst: Instance, cfg: DecodeConfig) -> Tuple[Trajectory, float]:
        """
        Best of cfg.n_rollouts rollouts.

        Returns:
            (best trajectory, wall-clock seconds)
        """
        started = time.perf_counter()
        best = self.decode(inst, cfg).best
        return best, time.perf_counter() - started

    def describe(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'architecture': dict(self.params.meta),
            'sparse_k': self.sparse_k,
        }
