"""Named trainable parameters and the Adam optimizer"""

import copy
import hashlib
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .tensor import Tensor, UsageError

ADAM_LR = 1e-4
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class ParameterStore:
    """
    Flat name -> Tensor map of trainable arrays.

    Also holds non-trainable buffers (batch-norm running statistics), the
    Adam moments per parameter, the optimizer step counter and free-form
    metadata describing the architecture.
    """

    def __init__(self, meta: Optional[Dict[str, Any]] = None):
        self.params: Dict[str, Tensor] = {}
        self.buffers: Dict[str, np.ndarray] = {}
        self.moments: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}
        self.step = 0
        self.meta: Dict[str, Any] = dict(meta or {})

    def register(self, name: str, data: np.ndarray) -> Tensor:
        """Add a trainable parameter; names must be unique"""
        if name in self.params:
            raise UsageError(f"Parameter '{name}' is already registered")
        tensor = Tensor(data, requires_grad=True, name=name)
        tensor.zero_grad()
        self.params[name] = tensor
        self.moments[name] = (np.zeros_like(tensor.data), np.zeros_like(tensor.data))
        return tensor

    def register_buffer(self, name: str, data: np.ndarray) -> np.ndarray:
        if name in self.buffers:
            raise UsageError(f"Buffer '{name}' is already registered")
        self.buffers[name] = np.array(data, dtype=np.float64)
        return self.buffers[name]

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def names(self, prefix: str = "") -> List[str]:
        return [n for n in self.params if n.startswith(prefix)]

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()

    def snapshot(self) -> 'ParameterStore':
        """Independent copy, safe to hand to read-only rollout workers"""
        return copy.deepcopy(self)

    def state_hash(self) -> str:
        """sha256 over parameter values and buffers (names sorted)"""
        digest = hashlib.sha256()
        for name in sorted(self.params):
            digest.update(name.encode())
            digest.update(self.params[name].data.tobytes())
        for name in sorted(self.buffers):
            digest.update(name.encode())
            digest.update(self.buffers[name].tobytes())
        return digest.hexdigest()

    def n_parameters(self) -> int:
        return int(sum(t.size for t in self.params.values()))


def adam_step(
    store: ParameterStore,
    lr: float = ADAM_LR,
    betas: Tuple[float, float] = ADAM_BETAS,
    eps: float = ADAM_EPS,
) -> None:
    """
    Apply one bias-corrected Adam update to every parameter, then zero grads.

    Parameters with a zero gradient and zero moments are left unchanged.
    """
    beta1, beta2 = betas
    store.step += 1
    t = store.step
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t

    for name, tensor in store.params.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        m, v = store.moments[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data -= lr * m_hat / (np.sqrt(v_hat) + eps)

    store.zero_grad()
