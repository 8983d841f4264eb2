"""Shaped reward, trajectory probabilities and trajectory-balance losses"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..autodiff import DomainError, ParameterStore, Tensor, constant, ops
from ..models import Instance, LogZMode, PBMode, SparseGraph, Trajectory
from ..network.gnn import MLP
from ..network.policy_net import Heatmap
from .decoder import log_normalize, replay


@dataclass
class RewardBatch:
    """
    Discriminator-shaped rewards of K solutions of one instance.

    neg_log_reward[k] = (1 - S_k) + R_k - mean(R); the reward itself is
    only ever used in log space.
    """
    lengths: np.ndarray
    scores: np.ndarray
    neg_log_reward: np.ndarray

    @property
    def log_reward(self) -> np.ndarray:
        return -self.neg_log_reward

    @property
    def size(self) -> int:
        return len(self.lengths)


def shaped_reward(lengths: Sequence[float], scores: Sequence[float]) -> RewardBatch:
    """
    Combine route lengths with discriminator scores.

    Raises:
        DomainError: If K = 0, the sizes differ or a score is outside [0, 1]
    """
    lengths = np.asarray(lengths, dtype=np.float64).reshape(-1)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if len(lengths) == 0 or len(lengths) != len(scores):
        raise DomainError(f"shaped_reward needs K >= 1 matching lengths/scores, "
                          f"got {len(lengths)} and {len(scores)}")
    if np.any(scores < 0.0) or np.any(scores > 1.0) or not np.all(np.isfinite(scores)):
        raise DomainError("discriminator scores must lie in [0, 1]")
    neg_log = (1.0 - scores) + (lengths - lengths.mean())
    return RewardBatch(lengths=lengths, scores=scores, neg_log_reward=neg_log)


class LogZHead:
    """
    Partition-function estimate log Z.

    Conditional mode maps mean-pooled final node embeddings of each instance
    through a small MLP; shared mode is one learned scalar for all instances.
    """

    def __init__(self, hidden_dim: int, mode: LogZMode = LogZMode.CONDITIONAL):
        self.mode = mode
        self.mlp = MLP(hidden_dim, [hidden_dim], 1, prefix="logz", output_sigmoid=False)

    def init(self, store: ParameterStore, rng: np.random.Generator) -> None:
        if self.mode == LogZMode.SHARED:
            store.register("logz.value", np.zeros((1, 1)))
        else:
            self.mlp.init(store, rng)
        store.meta['logz_mode'] = self.mode.value

    def forward(self, store: ParameterStore, h: Tensor, node_offsets: np.ndarray) -> Tensor:
        """One log Z per member graph, as a (members, 1) tensor"""
        members = len(node_offsets) - 1
        if self.mode == LogZMode.SHARED:
            return ops.gather(store["logz.value"], np.zeros(members, dtype=np.int64))
        return self.mlp.forward(store, ops.mean_aggregate(h, node_offsets))


def forward_logprob_batch(trajectories: Sequence[Trajectory], heatmap: Heatmap,
                          inst: Instance, temperature: float = 1.0) -> Tensor:
    """
    log P_F of each trajectory, recomputed from the heatmap tensor.

    Every step is replayed to rebuild its action set. Sparse steps are
    differentiable through the heatmap; distance-fallback steps are
    constants and forced single-action steps contribute exactly 0.

    Returns:
        (K, 1) tensor

    Raises:
        TrajectoryError: If a trajectory is inconsistent with the graph
    """
    g: SparseGraph = heatmap.graph
    action_edges: List[np.ndarray] = []
    chosen_edges: List[int] = []
    steps_per_traj: List[int] = []
    constant_part = np.zeros(len(trajectories))

    for k, traj in enumerate(trajectories):
        count = 0
        for step in replay(inst, g, traj.nodes):
            if step.forced:
                continue
            if step.actions.is_fallback:
                dist = inst.distances_from(step.source)[step.actions.nodes]
                constant_part[k] += log_normalize(-dist / temperature)[step.position]
                continue
            action_edges.append(step.actions.edge_ids)
            chosen_edges.append(int(step.actions.edge_ids[step.position]))
            count += 1
        steps_per_traj.append(count)

    if not chosen_edges:
        return constant(constant_part)

    scale = 1.0 / temperature
    offsets = np.concatenate([[0], np.cumsum([len(a) for a in action_edges])])
    log_scores = ops.log(heatmap.scores)
    normalizer = ops.segment_logsumexp(
        ops.mul_scalar(ops.gather(log_scores, np.concatenate(action_edges)), scale), offsets
    )
    step_logp = ops.sub(ops.mul_scalar(ops.gather(log_scores, chosen_edges), scale), normalizer)

    # per-trajectory sums as mean * count
    traj_offsets = np.concatenate([[0], np.cumsum(steps_per_traj)])
    summed = ops.hadamard(
        ops.mean_aggregate(step_logp, traj_offsets),
        constant(np.array(steps_per_traj, dtype=np.float64)),
    )
    return ops.add(summed, constant(constant_part))


def forward_logprob(traj: Trajectory, heatmap: Heatmap, inst: Instance,
                    temperature: float = 1.0) -> Tensor:
    """log P_F(tau) as a (1, 1) tensor"""
    return forward_logprob_batch([traj], heatmap, inst, temperature)


def backward_logprob(traj: Trajectory, inst: Instance, mode: PBMode = PBMode.DEFAULT) -> float:
    """
    log P_B(tau).

    Default: every partial route has a single parent, so P_B = 1. Symmetric
    mode divides by the number of equivalent encodings of the same solution:
    2n for a TSP tour (start node and direction), r! * 2^r for r CVRP routes
    (route order and direction).
    """
    if mode == PBMode.DEFAULT:
        return 0.0
    if not inst.is_cvrp:
        return -math.log(2 * inst.n_nodes)
    r = len(traj.routes())
    return -(math.lgamma(r + 1) + r * math.log(2.0))


def _broadcast(log_z: Tensor, k: int) -> Tensor:
    if log_z.shape == (k, 1):
        return log_z
    if log_z.shape != (1, 1):
        raise DomainError(f"log_z must be a scalar or ({k}, 1), got {log_z.shape}")
    return ops.gather(log_z, np.zeros(k, dtype=np.int64))


def tb_loss(forward_logp: Tensor, reward: RewardBatch, log_z: Tensor,
            backward_logp: Optional[Sequence[float]] = None) -> Tensor:
    """
    Trajectory balance with the shaped reward.

    (1 / K) * sum_k (log Z + log P_F(tau_k) - log R~(tau_k) - log P_B(tau_k))^2

    Args:
        forward_logp: (K, 1) log P_F, differentiable
        reward: Shaped rewards of the same K trajectories
        log_z: (1, 1) log Z of the instance
        backward_logp: K values of log P_B (0 when omitted)

    Returns:
        (1, 1) loss tensor
    """
    k = reward.size
    if forward_logp.shape != (k, 1):
        raise DomainError(f"forward_logp must be ({k}, 1), got {forward_logp.shape}")
    pb = np.zeros(k) if backward_logp is None else np.asarray(backward_logp, dtype=np.float64)
    target = constant(reward.log_reward + pb)
    residual = ops.sub(ops.add(_broadcast(log_z, k), forward_logp), target)
    return ops.mean_reduce(ops.square(residual))


def default_reward_temperature(n_nodes: int) -> float:
    """0.1 * |V|"""
    return 0.1 * n_nodes


def plain_reward(lengths: Sequence[float], reward_temperature: float) -> np.ndarray:
    """log R(x) = -length / T_reward"""
    if reward_temperature <= 0:
        raise DomainError(f"reward_temperature must be positive, got {reward_temperature}")
    return -np.asarray(lengths, dtype=np.float64) / reward_temperature


def tb_loss_plain(forward_logp: Tensor, lengths: Sequence[float], log_z: Tensor,
                  reward_temperature: float = 1.0,
                  backward_logp: Optional[Sequence[float]] = None) -> Tensor:
    """
    Trajectory balance with the unshaped reward R(x) = exp(-length / T_reward).

    Averaged over the trajectories given, so order within a batch is
    irrelevant.
    """
    log_r = plain_reward(lengths, reward_temperature)
    k = len(log_r)
    if forward_logp.shape != (k, 1):
        raise DomainError(f"forward_logp must be ({k}, 1), got {forward_logp.shape}")
    pb = np.zeros(k) if backward_logp is None else np.asarray(backward_logp, dtype=np.float64)
    residual = ops.sub(ops.add(_broadcast(log_z, k), forward_logp), constant(log_r + pb))
    return ops.mean_reduce(ops.square(residual))
