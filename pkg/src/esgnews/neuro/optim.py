"""Rectified Adam.

Standard Adam keeps exponential moving averages of the gradient (m) and its
square (v).  Early in training v rests on too few samples, so the adaptive
step has excessive variance.  The rectified variant tracks the effective
sample size ρ_t of the variance estimate; while ρ_t ≤ 4 it takes a plain
bias-corrected momentum step, and afterwards it applies the adaptive step
scaled by the variance-rectification factor r_t.
"""
from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor

__all__ = ["RAdam"]


class RAdam:
    def __init__(
        self,
        params: list[Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.rho_inf = 2.0 / (1.0 - beta2) - 1.0

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        t = self.t
        b1, b2 = self.beta1, self.beta2
        b1t, b2t = b1**t, b2**t
        rho_t = self.rho_inf - 2.0 * t * b2t / (1.0 - b2t)

        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for parameter {p.name!r}")
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            if rho_t > 4.0:
                r_t = math.sqrt(
                    ((rho_t - 4.0) * (rho_t - 2.0) * self.rho_inf)
                    / ((self.rho_inf - 4.0) * (self.rho_inf - 2.0) * rho_t)
                )
                step_size = self.lr * r_t * math.sqrt(1.0 - b2t) / (1.0 - b1t)
                p.data -= step_size * self.m[i] / (np.sqrt(self.v[i]) + self.eps)
            else:
                # variance estimate not yet trustworthy: momentum only
                p.data -= self.lr / (1.0 - b1t) * self.m[i]

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, p in enumerate(self.params):
            key = p.name or f"param{i}"
            out[f"opt.m.{key}"] = self.m[i]
            out[f"opt.v.{key}"] = self.v[i]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], t: int) -> None:
        self.t = t
        for i, p in enumerate(self.params):
            key = p.name or f"param{i}"
            self.m[i] = np.array(arrays[f"opt.m.{key}"], dtype=np.float64)
            self.v[i] = np.array(arrays[f"opt.v.{key}"], dtype=np.float64)
