"""Anisotropic gated GNN layers and MLP heads shared by both networks"""

import math
from typing import Any, Dict, List, Tuple

import numpy as np

from ..autodiff import ParameterStore, Tensor, constant, ops
from ..errors import CheckpointError, ConfigError


def uniform_init(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    """uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))"""
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class GatedGNN:
    """
    Input projections followed by L residual gated layers.

    Layer l updates node embeddings h (n, d) and edge embeddings e (m, d):

        h_i <- h_i + SiLU(BN(U h_i + mean_{j in N(i)} sigmoid(e_ij) * V h_j))
        e_ij <- e_ij + SiLU(BN(P e_ij + Q h_i + R h_j))

    where N(i) is the sparse out-neighbourhood of i. Both updates read the
    embeddings of the previous layer.
    """

    def __init__(self, hidden_dim: int, n_layers: int, node_in: int, edge_in: int,
                 prefix: str = ""):
        if hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be >= 1, got {hidden_dim}")
        if n_layers < 1:
            raise ConfigError(f"n_layers must be >= 1, got {n_layers}")
        self.hidden_dim = hidden_dim
        self.n_layers = n_layers
        self.node_in = node_in
        self.edge_in = edge_in
        self.prefix = prefix

    def _name(self, name: str) -> str:
        return f"{self.prefix}{name}"

    def init(self, store: ParameterStore, rng: np.random.Generator) -> None:
        """Register every layer parameter and batch-norm buffer"""
        d = self.hidden_dim
        store.register(self._name("node_embed.W"), uniform_init(rng, self.node_in, (self.node_in, d)))
        store.register(self._name("node_embed.b"), uniform_init(rng, self.node_in, (1, d)))
        store.register(self._name("edge_embed.W"), uniform_init(rng, self.edge_in, (self.edge_in, d)))
        store.register(self._name("edge_embed.b"), uniform_init(rng, self.edge_in, (1, d)))

        for layer in range(self.n_layers):
            base = self._name(f"layer{layer}")
            for weight in ("U", "V", "P", "Q", "R"):
                store.register(f"{base}.{weight}", uniform_init(rng, d, (d, d)))
            for norm in ("bn_h", "bn_e"):
                store.register(f"{base}.{norm}.gamma", np.ones((1, d)))
                store.register(f"{base}.{norm}.beta", np.zeros((1, d)))
                store.register_buffer(f"{base}.{norm}.running_mean", np.zeros(d))
                store.register_buffer(f"{base}.{norm}.running_var", np.ones(d))

    def _norm(self, store: ParameterStore, base: str, x: Tensor, training: bool) -> Tensor:
        return ops.batch_norm(
            x,
            store[f"{base}.gamma"],
            store[f"{base}.beta"],
            store.buffers[f"{base}.running_mean"],
            store.buffers[f"{base}.running_var"],
            training=training,
        )

    def forward(
        self,
        store: ParameterStore,
        node_feat: np.ndarray,
        edge_feat: np.ndarray,
        src: np.ndarray,
        dst: np.ndarray,
        neighbor_index: np.ndarray,
        training: bool,
    ) -> Tuple[Tensor, Tensor]:
        """
        Embed a (possibly batched) graph.

        Returns:
            (node embeddings (n, d), edge embeddings (m, d))

        Raises:
            ShapeError: If feature widths do not match the registered projections
        """
        h = ops.linear(constant(node_feat), store[self._name("node_embed.W")],
                       store[self._name("node_embed.b")])
        e = ops.linear(constant(edge_feat), store[self._name("edge_embed.W")],
                       store[self._name("edge_embed.b")])

        for layer in range(self.n_layers):
            base = self._name(f"layer{layer}")
            gate = ops.sigmoid(e)
            messages = ops.hadamard(gate, ops.gather(ops.linear(h, store[f"{base}.V"]), dst))
            node_update = ops.add(
                ops.linear(h, store[f"{base}.U"]),
                ops.mean_aggregate(messages, neighbor_index),
            )
            edge_update = ops.add(
                ops.linear(e, store[f"{base}.P"]),
                ops.add(
                    ops.gather(ops.linear(h, store[f"{base}.Q"]), src),
                    ops.gather(ops.linear(h, store[f"{base}.R"]), dst),
                ),
            )
            h_next = ops.add(h, ops.silu(self._norm(store, f"{base}.bn_h", node_update, training)))
            e_next = ops.add(e, ops.silu(self._norm(store, f"{base}.bn_e", edge_update, training)))
            h, e = h_next, e_next

        return h, e


class MLP:
    """Linear layers with SiLU between them; optional sigmoid on the output"""

    def __init__(self, in_dim: int, hidden: List[int], out_dim: int = 1,
                 prefix: str = "head", output_sigmoid: bool = True):
        self.widths = [in_dim] + list(hidden) + [out_dim]
        self.prefix = prefix
        self.output_sigmoid = output_sigmoid

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    def init(self, store: ParameterStore, rng: np.random.Generator) -> None:
        for i in range(self.n_layers):
            fan_in, fan_out = self.widths[i], self.widths[i + 1]
            store.register(f"{self.prefix}.{i}.W", uniform_init(rng, fan_in, (fan_in, fan_out)))
            store.register(f"{self.prefix}.{i}.b", uniform_init(rng, fan_in, (1, fan_out)))

    def forward(self, store: ParameterStore, x: Tensor) -> Tensor:
        for i in range(self.n_layers):
            x = ops.linear(x, store[f"{self.prefix}.{i}.W"], store[f"{self.prefix}.{i}.b"])
            if i < self.n_layers - 1:
                x = ops.silu(x)
        if self.output_sigmoid:
            x = ops.sigmoid(x)
        return x


def check_architecture(store: ParameterStore, expected: Dict[str, Any], label: str) -> None:
    """
    Compare the architecture metadata of a loaded store with a config.

    Raises:
        CheckpointError: On any mismatch
    """
    for key, value in expected.items():
        found = store.meta.get(key)
        if found != value:
            raise CheckpointError(
                f"{label} architecture mismatch on '{key}': checkpoint has {found}, "
                f"config wants {value}"
            )
