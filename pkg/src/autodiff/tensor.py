"""Tensors and the recording tape for reverse-mode differentiation"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import AGFNError


class AutodiffError(AGFNError):
    """Base exception for the differentiation core"""
    pass


class ShapeError(AutodiffError):
    """Exception raised when operand shapes are incompatible"""

    def __init__(self, op: str, *shapes: Tuple[int, ...]):
        self.op = op
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes {', '.join(str(s) for s in shapes)}")


class DomainError(AutodiffError):
    """Exception raised when an input lies outside an op's domain"""
    pass


class UsageError(AutodiffError):
    """Exception raised when the tape is used incorrectly"""
    pass


class Tensor:
    """
    A 2-D float64 array with an optional gradient buffer.

    Scalars are (1, 1) and column vectors are (n, 1); every op keeps data
    two-dimensional so linear layers need no reshaping.
    """

    __slots__ = ('data', 'requires_grad', 'grad', 'name')

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        array = np.array(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1, 1)
        elif array.ndim == 1:
            array = array.reshape(-1, 1)
        elif array.ndim > 2:
            raise ShapeError("tensor", array.shape)
        self.data = np.ascontiguousarray(array)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data) if self.requires_grad else None

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>"


def constant(data) -> Tensor:
    """A tensor that never receives gradients"""
    return Tensor(data, requires_grad=False)


@dataclass
class TapeRecord:
    """One executed primitive: its output, inputs and backward rule"""
    op: str
    output: Tensor
    inputs: Sequence[Tensor]
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


_ACTIVE: List['Tape'] = []


@dataclass
class Tape:
    """
    Ordered record of executed primitives.

    Ops executed inside ``with Tape() as tape:`` are recorded when any input
    requires a gradient. Records are in execution order, so replaying them
    in reverse visits every node after all of its consumers.
    """
    records: List[TapeRecord] = field(default_factory=list)

    def __enter__(self) -> 'Tape':
        _ACTIVE.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE.remove(self)

    def __len__(self) -> int:
        return len(self.records)


def active_tape() -> Optional[Tape]:
    return _ACTIVE[-1] if _ACTIVE else None


def record(op: str, output: Tensor, inputs: Sequence[Tensor],
           backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]) -> Tensor:
    """Mark the output as differentiable and log the op on the active tape"""
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        tape.records.append(TapeRecord(op, output, inputs, backward))
    return output


def backward(loss: Tensor, tape: Tape) -> None:
    """
    Accumulate d(loss)/d(t) into t.grad for every tensor recorded on the tape.

    Raises:
        UsageError: If the loss is not a single-element tensor
    """
    if loss.size != 1:
        raise UsageError(f"backward() needs a scalar loss, got shape {loss.shape}")

    grads = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        upstream = grads.pop(id(rec.output), None)
        if upstream is None:
            continue
        for tensor, grad in zip(rec.inputs, rec.backward(upstream)):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad

    # Whatever is left in grads belongs to leaves (parameters or inputs)
    for tensor in _leaf_tensors(tape, loss):
        grad = grads.get(id(tensor))
        if grad is not None:
            tensor.accumulate(grad)


def _leaf_tensors(tape: Tape, loss: Tensor) -> List[Tensor]:
    produced = {id(rec.output) for rec in tape.records}
    seen = set()
    leaves = []
    for rec in tape.records:
        for tensor in rec.inputs:
            key = id(tensor)
            if tensor.requires_grad and key not in produced and key not in seen:
                seen.add(key)
                leaves.append(tensor)
    if not tape.records and loss.requires_grad:
        leaves.append(loss)
    return leaves
