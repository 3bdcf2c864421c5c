"""Finite-difference verification of analytic gradients.

``max_relative_error`` drives any scalar-valued closure twice per tensor
element (central differences) and compares against the backward pass.  Kept
in the library rather than the test tree so users can check custom layers
the same way.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor

__all__ = ["numeric_gradients", "analytic_gradients", "max_relative_error"]

DEFAULT_H = 1e-4


def analytic_gradients(f: Callable[[], Tensor], tensors: Sequence[Tensor]) -> list[np.ndarray]:
    for t in tensors:
        t.grad = None
    loss = f()
    loss.backward()
    grads = []
    for t in tensors:
        if t.grad is None:
            grads.append(np.zeros_like(t.data))
        else:
            grads.append(t.grad.copy())
    return grads


def numeric_gradients(
    f: Callable[[], Tensor], tensors: Sequence[Tensor], h: float = DEFAULT_H
) -> list[np.ndarray]:
    grads = []
    for t in tensors:
        grad = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = float(f().data)
            flat[i] = orig - h
            lo = float(f().data)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * h)
        grads.append(grad)
    return grads


def max_relative_error(
    f: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = DEFAULT_H,
    denom_floor: float = 1e-3,
) -> float:
    """Worst elementwise |analytic − numeric| / max(|analytic|, |numeric|, floor)."""
    analytic = analytic_gradients(f, tensors)
    numeric = numeric_gradients(f, tensors, h)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), denom_floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst
