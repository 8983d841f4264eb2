"""Differentiable primitives used by the policy and discriminator networks"""

from typing import List, Optional, Sequence

import numpy as np

from .tensor import DomainError, ShapeError, Tensor, record

BN_MOMENTUM = 0.1
BN_EPS = 1e-5


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(op, a.shape, b.shape)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ W (+ b) with x (n, in), W (in, out), b (1, out)"""
    if x.shape[1] != weight.shape[0]:
        raise ShapeError("linear", x.shape, weight.shape)
    if bias is not None and bias.shape != (1, weight.shape[1]):
        raise ShapeError("linear(bias)", weight.shape, bias.shape)

    data = x.data @ weight.data
    if bias is not None:
        data = data + bias.data
    out = Tensor(data)

    def grad_fn(g):
        grads = [g @ weight.data.T, x.data.T @ g]
        if bias is not None:
            grads.append(g.sum(axis=0, keepdims=True))
        return grads

    inputs = [x, weight] + ([bias] if bias is not None else [])
    return record("linear", out, inputs, grad_fn)


def sigmoid(x: Tensor) -> Tensor:
    s = _stable_sigmoid(x.data)
    out = Tensor(s)
    return record("sigmoid", out, [x], lambda g: [g * s * (1.0 - s)])


def silu(x: Tensor) -> Tensor:
    """x * sigmoid(x)"""
    s = _stable_sigmoid(x.data)
    out = Tensor(x.data * s)
    return record("silu", out, [x], lambda g: [g * s * (1.0 + x.data * (1.0 - s))])


def log(x: Tensor) -> Tensor:
    """Natural log; every entry must be strictly positive"""
    if np.any(x.data <= 0):
        raise DomainError(f"log of non-positive value (min {x.data.min():.3g})")
    out = Tensor(np.log(x.data))
    return record("log", out, [x], lambda g: [g / x.data])


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)
    out = Tensor(e)
    return record("exp", out, [x], lambda g: [g * e])


def square(x: Tensor) -> Tensor:
    out = Tensor(x.data * x.data)
    return record("square", out, [x], lambda g: [2.0 * g * x.data])


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("add", a, b)
    out = Tensor(a.data + b.data)
    return record("add", out, [a, b], lambda g: [g, g])


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("sub", a, b)
    out = Tensor(a.data - b.data)
    return record("sub", out, [a, b], lambda g: [g, -g])


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("hadamard", a, b)
    out = Tensor(a.data * b.data)
    return record("hadamard", out, [a, b], lambda g: [g * b.data, g * a.data])


def mul_scalar(x: Tensor, c: float) -> Tensor:
    c = float(c)
    out = Tensor(x.data * c)
    return record("mul_scalar", out, [x], lambda g: [g * c])


def gather(x: Tensor, indices) -> Tensor:
    """Rows x[indices] (indices may repeat)"""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise ShapeError("gather", x.shape, (int(idx.min()), int(idx.max())))
    out = Tensor(x.data[idx].reshape(len(idx), x.shape[1]))

    def grad_fn(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, idx, g)
        return [gx]

    return record("gather", out, [x], grad_fn)


def concat(xs: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate along columns (axis=1) or rows (axis=0)"""
    if not xs:
        raise ShapeError("concat", ())
    other = 1 - axis
    if any(t.shape[other] != xs[0].shape[other] for t in xs):
        raise ShapeError("concat", *[t.shape for t in xs])
    out = Tensor(np.concatenate([t.data for t in xs], axis=axis))
    splits = np.cumsum([t.shape[axis] for t in xs])[:-1]

    def grad_fn(g):
        return np.split(g, splits, axis=axis)

    return record("concat", out, list(xs), grad_fn)


def mean_reduce(x: Tensor, axis: Optional[int] = None) -> Tensor:
    """Mean over all entries (-> (1, 1)) or over rows (axis=0 -> (1, d))"""
    if axis is None:
        out = Tensor(np.array([[x.data.mean()]]))
        scale = 1.0 / x.size
        return record("mean_reduce", out, [x], lambda g: [np.full_like(x.data, g[0, 0] * scale)])
    if axis != 0:
        raise ShapeError("mean_reduce(axis)", x.shape)
    rows = x.shape[0]
    out = Tensor(x.data.mean(axis=0, keepdims=True))
    return record("mean_reduce", out, [x], lambda g: [np.repeat(g / rows, rows, axis=0)])


def mean_aggregate(edge_values: Tensor, neighbor_index: np.ndarray) -> Tensor:
    """
    Per-segment mean of rows.

    neighbor_index holds n + 1 offsets; rows offsets[i]:offsets[i+1] belong
    to node i. Empty segments yield zeros.
    """
    offsets = np.asarray(neighbor_index, dtype=np.int64)
    if offsets[-1] != edge_values.shape[0]:
        raise ShapeError("mean_aggregate", edge_values.shape, (int(offsets[-1]),))
    counts = np.diff(offsets)
    n = len(counts)
    owner = np.repeat(np.arange(n), counts)
    denom = np.maximum(counts, 1).astype(np.float64)[:, None]

    summed = np.zeros((n, edge_values.shape[1]))
    np.add.at(summed, owner, edge_values.data)
    out = Tensor(summed / denom)

    def grad_fn(g):
        return [(g / denom)[owner]]

    return record("mean_aggregate", out, [edge_values], grad_fn)


def segment_logsumexp(x: Tensor, offsets: np.ndarray) -> Tensor:
    """
    log(sum(exp(x))) over each segment of a column vector.

    Used to normalize masked action scores; every segment must be non-empty.
    """
    offsets = np.asarray(offsets, dtype=np.int64)
    if x.shape[1] != 1 or offsets[-1] != x.shape[0]:
        raise ShapeError("segment_logsumexp", x.shape, (int(offsets[-1]),))
    counts = np.diff(offsets)
    if np.any(counts == 0):
        raise DomainError("segment_logsumexp over an empty segment")
    owner = np.repeat(np.arange(len(counts)), counts)
    values = x.data[:, 0]

    seg_max = np.maximum.reduceat(values, offsets[:-1])
    shifted = np.exp(values - seg_max[owner])
    seg_sum = np.add.reduceat(shifted, offsets[:-1])
    result = seg_max + np.log(seg_sum)
    out = Tensor(result.reshape(-1, 1))
    softmax = (shifted / seg_sum[owner]).reshape(-1, 1)

    def grad_fn(g):
        return [softmax * g[owner]]

    return record("segment_logsumexp", out, [x], grad_fn)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
) -> Tensor:
    """
    Per-feature batch normalization over the rows of x.

    In training mode the batch statistics are used and the running
    statistics are updated in place; in inference mode the frozen running
    statistics are used.
    """
    d = x.shape[1]
    if gamma.shape != (1, d) or beta.shape != (1, d):
        raise ShapeError("batch_norm", x.shape, gamma.shape, beta.shape)
    if running_mean.shape != (d,) or running_var.shape != (d,):
        raise ShapeError("batch_norm(running)", x.shape, running_mean.shape)

    if not training:
        inv_std = 1.0 / np.sqrt(running_var + eps)
        x_hat = (x.data - running_mean) * inv_std
        out = Tensor(gamma.data * x_hat + beta.data)

        def infer_grad(g):
            return [
                g * gamma.data * inv_std,
                (g * x_hat).sum(axis=0, keepdims=True),
                g.sum(axis=0, keepdims=True),
            ]

        return record("batch_norm", out, [x, gamma, beta], infer_grad)

    rows = x.shape[0]
    mean = x.data.mean(axis=0)
    var = x.data.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mean) * inv_std
    out = Tensor(gamma.data * x_hat + beta.data)

    unbiased = var * rows / (rows - 1) if rows > 1 else var
    running_mean *= 1.0 - momentum
    running_mean += momentum * mean
    running_var *= 1.0 - momentum
    running_var += momentum * unbiased

    def train_grad(g):
        g_hat = g * gamma.data
        gx = inv_std / rows * (
            rows * g_hat
            - g_hat.sum(axis=0, keepdims=True)
            - x_hat * (g_hat * x_hat).sum(axis=0, keepdims=True)
        )
        return [
            gx,
            (g * x_hat).sum(axis=0, keepdims=True),
            g.sum(axis=0, keepdims=True),
        ]

    return record("batch_norm", out, [x, gamma, beta], train_grad)


def stack_scalars(values: List[Tensor]) -> Tensor:
    """Stack (1, 1) tensors into a (k, 1) column"""
    return concat(values, axis=0)
