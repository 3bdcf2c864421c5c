"""Network layers over the autodiff substrate.

Data layout is (batch, time, channels) everywhere until a Flatten or a
pooling layer collapses the time axis.  Layers own their parameters as
gradient-enabled tensors; stateful extras (batch-norm running statistics,
dropout random streams) live beside them and are checkpointed separately.
"""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from . import tensor as T
from .tensor import Tensor

__all__ = [
    "Layer",
    "Dense",
    "Conv1dSame",
    "BatchNorm1d",
    "ReLU",
    "Softmax",
    "MaxPool1d",
    "GlobalMaxPool",
    "Flatten",
    "Dropout",
    "LayerNorm",
    "MultiHeadSelfAttention",
    "TransformerBlock",
    "glorot_uniform",
]


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    name: str = ""

    def params(self) -> list[Tensor]:
        return []

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Non-trainable arrays that must survive a checkpoint round-trip."""
        return {}

    def forward(self, x: Tensor, train: bool) -> Tensor:
        raise NotImplementedError

    def set_rng(self, rng: np.random.Generator) -> None:
        """Reseed stochastic behavior (dropout); no-op for most layers."""


class Dense(Layer):
    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator, name: str = "dense") -> None:
        self.name = name
        self.w = Tensor(glorot_uniform(rng, (fan_in, fan_out), fan_in, fan_out),
                        requires_grad=True, name=f"{name}.w")
        self.b = Tensor(np.zeros(fan_out), requires_grad=True, name=f"{name}.b")

    def params(self) -> list[Tensor]:
        return [self.w, self.b]

    def forward(self, x: Tensor, train: bool) -> Tensor:
        return T.add(T.matmul(x, self.w), self.b)


class Conv1dSame(Layer):
    def __init__(self, ch_in: int, ch_out: int, kernel: int, rng: np.random.Generator,
                 name: str = "conv") -> None:
        self.name = name
        self.kernel = kernel
        fan_in, fan_out = kernel * ch_in, kernel * ch_out
        self.w = Tensor(glorot_uniform(rng, (kernel, ch_in, ch_out), fan_in, fan_out),
                        requires_grad=True, name=f"{name}.w")
        self.b = Tensor(np.zeros(ch_out), requires_grad=True, name=f"{name}.b")

    def params(self) -> list[Tensor]:
        return [self.w, self.b]

    def forward(self, x: Tensor, train: bool) -> Tensor:
        return T.conv1d_same(x, self.w, self.b)


class BatchNorm1d(Layer):
    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5,
                 name: str = "bn") -> None:
        self.name = name
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(channels), requires_grad=True, name=f"{name}.gamma")
        self.beta = Tensor(np.zeros(channels), requires_grad=True, name=f"{name}.beta")
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def params(self) -> list[Tensor]:
        return [self.gamma, self.beta]

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.running_mean": self.running_mean,
                f"{self.name}.running_var": self.running_var}

    def forward(self, x: Tensor, train: bool) -> Tensor:
        if train:
            out, mu, var = T.batchnorm_train(x, self.gamma, self.beta, self.eps)
            m = self.momentum
            self.running_mean = m * self.running_mean + (1.0 - m) * mu
            self.running_var = m * self.running_var + (1.0 - m) * var
            return out
        return T.batchnorm_eval(x, self.gamma, self.beta,
                                self.running_mean, self.running_var, self.eps)


class ReLU(Layer):
    def forward(self, x: Tensor, train: bool) -> Tensor:
        return T.relu(x)


class Softmax(Layer):
    def forward(self, x: Tensor, train: bool) -> Tensor:
        return T.softmax(x)


class MaxPool1d(Layer):
    def __init__(self, window: int = 2) -> None:
        self.window = window

    def forward(self, x: Tensor, train: bool) -> Tensor:
        return T.maxpool1d(x, self.window)


class GlobalMaxPool(Layer):
    def forward(self, x: Tensor, train: bool) -> Tensor:
        return T.global_maxpool(x)


class Flatten(Layer):
    def forward(self, x: Tensor, train: bool) -> Tensor:
        batch = x.shape[0]
        return T.reshape(x, (batch, int(np.prod(x.shape[1:]))))


class Dropout(Layer):
    """Inverted dropout: keep-units scaled by 1/(1-rate) at train time."""

    def __init__(self, rate: float, rng: np.random.Generator | None = None, name: str = "dropout") -> None:
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate {rate} outside [0, 1)")
        self.name = name
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def set_rng(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def forward(self, x: Tensor, train: bool) -> Tensor:
        if not train or self.rate == 0.0:
            return x
        keep = 1.0 - self.rate
        mask = (self.rng.random(x.shape) < keep).astype(np.float64) / keep
        return T.mul(x, mask)


class LayerNorm(Layer):
    def __init__(self, dim: int, eps: float = 1e-5, name: str = "ln") -> None:
        self.name = name
        self.eps = eps
        self.gamma = Tensor(np.ones(dim), requires_grad=True, name=f"{name}.gamma")
        self.beta = Tensor(np.zeros(dim), requires_grad=True, name=f"{name}.beta")

    def params(self) -> list[Tensor]:
        return [self.gamma, self.beta]

    def forward(self, x: Tensor, train: bool) -> Tensor:
        return T.layer_norm(x, self.gamma, self.beta, self.eps)


class MultiHeadSelfAttention(Layer):
    """Scaled dot-product self-attention: softmax(QKᵀ/√head_size)·V per head,
    heads concatenated and projected back to the input width."""

    def __init__(self, dim: int, heads: int, head_size: int, rng: np.random.Generator,
                 name: str = "mha") -> None:
        self.name = name
        self.dim = dim
        self.heads = heads
        self.head_size = head_size
        self.scale = 1.0 / math.sqrt(head_size)
        self.wq, self.wk, self.wv = [], [], []
        self.bq, self.bk, self.bv = [], [], []
        for h in range(heads):
            for store, bias_store, tag in ((self.wq, self.bq, "q"), (self.wk, self.bk, "k"),
                                           (self.wv, self.bv, "v")):
                store.append(Tensor(glorot_uniform(rng, (dim, head_size), dim, head_size),
                                    requires_grad=True, name=f"{name}.h{h}.w{tag}"))
                bias_store.append(Tensor(np.zeros(head_size), requires_grad=True,
                                         name=f"{name}.h{h}.b{tag}"))
        self.wo = Tensor(glorot_uniform(rng, (heads * head_size, dim), heads * head_size, dim),
                         requires_grad=True, name=f"{name}.wo")
        self.bo = Tensor(np.zeros(dim), requires_grad=True, name=f"{name}.bo")
        self.last_attention: list[np.ndarray] = []

    def params(self) -> list[Tensor]:
        out: list[Tensor] = []
        for h in range(self.heads):
            out.extend([self.wq[h], self.bq[h], self.wk[h], self.bk[h], self.wv[h], self.bv[h]])
        out.extend([self.wo, self.bo])
        return out

    def forward(self, x: Tensor, train: bool) -> Tensor:
        contexts = []
        self.last_attention = []
        for h in range(self.heads):
            q = T.add(T.matmul(x, self.wq[h]), self.bq[h])
            k = T.add(T.matmul(x, self.wk[h]), self.bk[h])
            v = T.add(T.matmul(x, self.wv[h]), self.bv[h])
            scores = T.mul(T.matmul(q, T.transpose_last2(k)), self.scale)
            attn = T.softmax(scores)
            self.last_attention.append(attn.data)
            contexts.append(T.matmul(attn, v))
        merged = T.concat_last(contexts)
        return T.add(T.matmul(merged, self.wo), self.bo)


class TransformerBlock(Layer):
    """norm → attention → dropout → residual add → norm, optionally followed
    by a feed-forward sublayer (off by default)."""

    def __init__(self, dim: int, heads: int, head_size: int, dropout_rate: float,
                 rng: np.random.Generator, ffn_dim: int | None = None,
                 name: str = "block") -> None:
        self.name = name
        self.ln1 = LayerNorm(dim, name=f"{name}.ln1")
        self.mha = MultiHeadSelfAttention(dim, heads, head_size, rng, name=f"{name}.mha")
        self.drop = Dropout(dropout_rate, name=f"{name}.drop")
        self.ln2 = LayerNorm(dim, name=f"{name}.ln2")
        self.ffn_dim = ffn_dim
        if ffn_dim is not None:
            self.ff1 = Dense(dim, ffn_dim, rng, name=f"{name}.ff1")
            self.ff2 = Dense(ffn_dim, dim, rng, name=f"{name}.ff2")
            self.drop2 = Dropout(dropout_rate, name=f"{name}.drop2")
            self.ln3 = LayerNorm(dim, name=f"{name}.ln3")

    def params(self) -> list[Tensor]:
        out = [*self.ln1.params(), *self.mha.params(), *self.ln2.params()]
        if self.ffn_dim is not None:
            out.extend([*self.ff1.params(), *self.ff2.params(), *self.ln3.params()])
        return out

    def set_rng(self, rng: np.random.Generator) -> None:
        self.drop.set_rng(rng)
        if self.ffn_dim is not None:
            self.drop2.set_rng(np.random.default_rng(rng.integers(2**63)))

    def forward(self, x: Tensor, train: bool) -> Tensor:
        a = self.mha.forward(self.ln1.forward(x, train), train)
        a = self.drop.forward(a, train)
        y = self.ln2.forward(T.add(x, a), train)
        if self.ffn_dim is not None:
            f = self.ff2.forward(T.relu(self.ff1.forward(y, train)), train)
            f = self.drop2.forward(f, train)
            y = self.ln3.forward(T.add(y, f), train)
        return y
