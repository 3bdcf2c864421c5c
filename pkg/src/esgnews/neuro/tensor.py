"""Reverse-mode autodiff on float64 numpy arrays.

A :class:`Tensor` wraps an ndarray plus an optional gradient slot.  Every
operation below builds the result tensor and, when any input participates in
gradients, records a closure that routes the upstream gradient back to its
parents.  ``backward()`` walks the recorded graph once in reverse
topological order.  Everything is 64-bit: at this model scale the cost is
irrelevant and finite-difference comparisons stay clean.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "add",
    "sub",
    "mul",
    "matmul",
    "reshape",
    "transpose_last2",
    "concat_last",
    "relu",
    "softmax",
    "layer_norm",
    "conv1d_same",
    "maxpool1d",
    "global_maxpool",
    "batchnorm_train",
    "batchnorm_eval",
    "mean_all",
    "neg_log_pick_mean",
]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        name: str | None = None,
        _parents: tuple["Tensor", ...] = (),
        _backward: Callable[[np.ndarray], None] | None = None,
    ) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar")
            grad = np.ones_like(self.data)
        # iterative topological order (graphs can outgrow the recursion limit)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self._accumulate(grad)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    if not needs:
        return Tensor(data)
    return Tensor(data, requires_grad=True, _parents=tuple(parents), _backward=backward)


def add(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward)


def sub(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data - b.data

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy batching rules on the leading axes."""
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data @ b.data

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2)
            a._accumulate(_unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.swapaxes(a.data, -1, -2) @ g
            b._accumulate(_unbroadcast(gb, b.data.shape))

    return _make(out_data, (a, b), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    x = _as_tensor(x)
    out_data = x.data.reshape(shape)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            x._accumulate(g.reshape(x.data.shape))

    return _make(out_data, (x,), backward)


def transpose_last2(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    out_data = np.swapaxes(x.data, -1, -2)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            x._accumulate(np.swapaxes(g, -1, -2))

    return _make(out_data, (x,), backward)


def concat_last(tensors: Sequence[Tensor]) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=-1)
    sizes = [t.data.shape[-1] for t in tensors]

    def backward(g: np.ndarray) -> None:
        offset = 0
        for t, size in zip(tensors, sizes):
            if t.requires_grad:
                t._accumulate(g[..., offset : offset + size])
            offset += size

    return _make(out_data, tensors, backward)


def relu(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0.0
    out_data = np.where(mask, x.data, 0.0)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            x._accumulate(g * mask)

    return _make(out_data, (x,), backward)


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, shift-stabilized."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            inner = (g * s).sum(axis=-1, keepdims=True)
            x._accumulate(s * (g - inner))

    return _make(s, (x,), backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply the affine pair."""
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc**2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out_data = gamma.data * xhat + beta.data
    n = x.data.shape[-1]

    def backward(g: np.ndarray) -> None:
        if gamma.requires_grad:
            reduce_axes = tuple(range(g.ndim - 1))
            gamma._accumulate(_unbroadcast((g * xhat).sum(axis=reduce_axes), gamma.data.shape))
        if beta.requires_grad:
            reduce_axes = tuple(range(g.ndim - 1))
            beta._accumulate(_unbroadcast(g.sum(axis=reduce_axes), beta.data.shape))
        if x.requires_grad:
            dxhat = g * gamma.data
            term1 = n * dxhat
            term2 = dxhat.sum(axis=-1, keepdims=True)
            term3 = xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
            x._accumulate((inv / n) * (term1 - term2 - term3))

    return _make(out_data, (x, gamma, beta), backward)


def conv1d_same(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """1-D cross-correlation with length-preserving zero padding.

    ``x`` is (batch, time, ch_in); ``w`` is (kernel, ch_in, ch_out).  Even
    kernels pad one short on the left, matching the usual "same" rule.
    """
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    batch, time, cin = x.data.shape
    kernel, w_cin, cout = w.data.shape
    if w_cin != cin:
        raise ValueError(f"conv weight expects {w_cin} input channels, got {cin}")
    pad_l = (kernel - 1) // 2
    pad_r = kernel - 1 - pad_l
    xp = np.pad(x.data, ((0, 0), (pad_l, pad_r), (0, 0)))
    out_data = np.zeros((batch, time, cout))
    for k in range(kernel):
        out_data += xp[:, k : k + time, :] @ w.data[k]
    out_data += b.data

    def backward(g: np.ndarray) -> None:
        if b.requires_grad:
            b._accumulate(g.sum(axis=(0, 1)))
        if w.requires_grad:
            gw = np.empty_like(w.data)
            for k in range(kernel):
                gw[k] = np.einsum("bti,bto->io", xp[:, k : k + time, :], g)
            w._accumulate(gw)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for k in range(kernel):
                gxp[:, k : k + time, :] += g @ w.data[k].T
            x._accumulate(gxp[:, pad_l : pad_l + time, :])

    return _make(out_data, (x, w, b), backward)


def maxpool1d(x: Tensor, window: int = 2) -> Tensor:
    """Non-overlapping max pooling along time; trailing remainder dropped."""
    x = _as_tensor(x)
    batch, time, ch = x.data.shape
    out_t = time // window
    if out_t == 0:
        raise ValueError(f"time axis {time} shorter than pool window {window}")
    trimmed = x.data[:, : out_t * window, :].reshape(batch, out_t, window, ch)
    arg = trimmed.argmax(axis=2)
    out_data = np.take_along_axis(trimmed, arg[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            gx = np.zeros((batch, out_t, window, ch))
            np.put_along_axis(gx, arg[:, :, None, :], g[:, :, None, :], axis=2)
            full = np.zeros_like(x.data)
            full[:, : out_t * window, :] = gx.reshape(batch, out_t * window, ch)
            x._accumulate(full)

    return _make(out_data, (x,), backward)


def global_maxpool(x: Tensor) -> Tensor:
    """Per-channel max over the whole time axis: (B, T, C) -> (B, C)."""
    x = _as_tensor(x)
    if x.data.shape[1] == 0:
        raise ValueError("empty time axis")
    arg = x.data.argmax(axis=1)
    out_data = np.take_along_axis(x.data, arg[:, None, :], axis=1)[:, 0, :]

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.put_along_axis(gx, arg[:, None, :], g[:, None, :], axis=1)
            x._accumulate(gx)

    return _make(out_data, (x,), backward)


def batchnorm_train(
    x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5
) -> tuple[Tensor, np.ndarray, np.ndarray]:
    """Normalize (B, T, C) per channel with batch statistics.

    Returns the output plus the batch mean/var so the caller can maintain
    running statistics.  Batch size must be at least 2.
    """
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    if x.data.shape[0] < 2:
        raise ValueError("batch normalization in train mode needs batch size >= 2")
    axes = (0, 1)
    n = x.data.shape[0] * x.data.shape[1]
    mu = x.data.mean(axis=axes)
    xc = x.data - mu
    var = (xc**2).mean(axis=axes)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out_data = gamma.data * xhat + beta.data

    def backward(g: np.ndarray) -> None:
        if gamma.requires_grad:
            gamma._accumulate((g * xhat).sum(axis=axes))
        if beta.requires_grad:
            beta._accumulate(g.sum(axis=axes))
        if x.requires_grad:
            dxhat = g * gamma.data
            term1 = n * dxhat
            term2 = dxhat.sum(axis=axes)
            term3 = xhat * (dxhat * xhat).sum(axis=axes)
            x._accumulate((inv / n) * (term1 - term2 - term3))

    return _make(out_data, (x, gamma, beta), backward), mu, var


def batchnorm_eval(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    eps: float = 1e-5,
) -> Tensor:
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    inv = 1.0 / np.sqrt(running_var + eps)
    xhat = (x.data - running_mean) * inv
    out_data = gamma.data * xhat + beta.data

    def backward(g: np.ndarray) -> None:
        axes = tuple(range(g.ndim - 1))
        if gamma.requires_grad:
            gamma._accumulate((g * xhat).sum(axis=axes))
        if beta.requires_grad:
            beta._accumulate(g.sum(axis=axes))
        if x.requires_grad:
            x._accumulate(g * gamma.data * inv)

    return _make(out_data, (x, gamma, beta), backward)


def mean_all(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    out_data = np.asarray(x.data.mean())
    n = x.data.size

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            x._accumulate(np.full_like(x.data, float(g) / n))

    return _make(out_data, (x,), backward)


def neg_log_pick_mean(probs: Tensor, classes: np.ndarray, floor: float = 1e-12) -> Tensor:
    """Mean of -log(probs[i, classes[i]]), the cross-entropy of hard labels.

    Probabilities below ``floor`` are clipped before the log; clipped entries
    get zero gradient (the clip is active there).
    """
    probs = _as_tensor(probs)
    classes = np.asarray(classes, dtype=np.int64)
    if classes.ndim != 1 or classes.shape[0] != probs.data.shape[0]:
        raise ValueError("one class index per row required")
    if classes.min() < 0 or classes.max() >= probs.data.shape[1]:
        raise ValueError("class index out of range")
    rows = np.arange(classes.shape[0])
    picked = probs.data[rows, classes]
    clipped = np.maximum(picked, floor)
    out_data = np.asarray(-np.log(clipped).mean())

    def backward(g: np.ndarray) -> None:
        if probs.requires_grad:
            gp = np.zeros_like(probs.data)
            live = picked >= floor
            gp[rows[live], classes[live]] = -float(g) / (clipped[live] * classes.shape[0])
            probs._accumulate(gp)

    return _make(out_data, (probs,), backward)
