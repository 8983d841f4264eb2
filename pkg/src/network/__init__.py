"""Graph neural networks: the policy (generator) and the discriminator"""

from .gnn import GatedGNN, MLP
from .policy_net import PolicyNet, Heatmap, TRAIN, INFER
from .discriminator import Discriminator, LabeledSolutionSet, score, score_batch, disc_loss

__all__ = [
    "GatedGNN",
    "MLP",
    "PolicyNet",
    "Heatmap",
    "TRAIN",
    "INFER",
    "Discriminator",
    "LabeledSolutionSet",
    "score",
    "score_batch",
    "disc_loss",
]
