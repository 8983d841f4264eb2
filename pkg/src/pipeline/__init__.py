"""Pipeline modules: generation, decoding, losses, local search, baselines, training"""

from .instances import generate, generate_many
from .sparse_graph import sparsify, build_features, build_graph, batch_graphs, replicate
from .decoder import decode_batch, rollout, replay, DecodeResult
from .gflownet_loss import (
    RewardBatch,
    LogZHead,
    shaped_reward,
    forward_logprob,
    backward_logprob,
    tb_loss,
    tb_loss_plain,
)
from .local_search import improve, two_opt
from .baselines import (
    nearest_neighbor,
    nearest_neighbor_two_opt,
    held_karp,
    gap_pct,
    gap_report,
    load_reference_results,
)
from .trainer import Trainer, TrainLogRecord, train
from .solver import Solver

__all__ = [
    "generate",
    "generate_many",
    "sparsify",
    "build_features",
    "build_graph",
    "batch_graphs",
    "replicate",
    "decode_batch",
    "rollout",
    "replay",
    "DecodeResult",
    "RewardBatch",
    "LogZHead",
    "shaped_reward",
    "forward_logprob",
    "backward_logprob",
    "tb_loss",
    "tb_loss_plain",
    "improve",
    "two_opt",
    "nearest_neighbor",
    "nearest_neighbor_two_opt",
    "held_karp",
    "gap_pct",
    "gap_report",
    "load_reference_results",
    "Trainer",
    "TrainLogRecord",
    "train",
    "Solver",
]
