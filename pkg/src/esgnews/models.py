"""The four sequence architectures with classification and regression heads.

All four consume a (rows × 12) monthly-signal matrix per company:

* ``basic_cnn``             conv(64, k2, same) → maxpool(2) → flatten → dense(265, relu) → head
* ``deep_cnn``              conv(32,k3)/conv(64,k2)/conv(128,k1), each + batchnorm + relu → global maxpool → head
* ``cnn_transformer``       conv(64,k3)+bn+relu → conv(128,k1)+bn+relu → 1 encoder block → global maxpool → head
* ``cnn_deep_transformer``  same front-end with 3 consecutive encoder blocks

The classification head treats integer rating buckets as 100 classes
(dense + softmax); the regression head is a single linear unit.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import CompanyYearSeries
from . import neuro
from .neuro import (
    BatchNorm1d,
    Conv1dSame,
    Dense,
    Flatten,
    GlobalMaxPool,
    Layer,
    MaxPool1d,
    ReLU,
    Softmax,
    Tensor,
    TransformerBlock,
)

__all__ = [
    "Arch",
    "Head",
    "ModelSpec",
    "Network",
    "build",
    "quantize_target",
    "predict_rating",
    "predict_ratings",
    "TIME_STEPS",
]

TIME_STEPS = 12


class Arch(enum.Enum):
    BASIC_CNN = "basic_cnn"
    DEEP_CNN = "deep_cnn"
    CNN_TRANSFORMER = "cnn_transformer"
    CNN_DEEP_TRANSFORMER = "cnn_deep_transformer"


class Head(enum.Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


@dataclass(frozen=True)
class ModelSpec:
    """Architecture + head + the hyperparameters, defaulted to the published
    configuration of each model."""

    arch: Arch
    head: Head
    n_classes: int = 100
    basic_filters: int = 64
    basic_kernel: int = 2
    basic_dense_units: int = 265
    pool_window: int = 2
    deep_filters: tuple[int, int, int] = (32, 64, 128)
    deep_kernels: tuple[int, int, int] = (3, 2, 1)
    trans_conv_filters: tuple[int, int] = (64, 128)
    trans_conv_kernels: tuple[int, int] = (3, 1)
    attention_heads: int = 8
    attention_head_size: int = 200
    transformer_dropout: float = 0.2
    ffn_dim: int | None = None  # encoder blocks carry no feed-forward sublayer unless set

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ValueError("n_classes must be at least 2")

    @property
    def n_transformer_blocks(self) -> int:
        if self.arch is Arch.CNN_TRANSFORMER:
            return 1
        if self.arch is Arch.CNN_DEEP_TRANSFORMER:
            return 3
        return 0

    def to_json(self) -> str:
        payload = asdict(self)
        payload["arch"] = self.arch.value
        payload["head"] = self.head.value
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        payload = json.loads(text)
        payload["arch"] = Arch(payload["arch"])
        payload["head"] = Head(payload["head"])
        for key in ("deep_filters", "deep_kernels", "trans_conv_filters", "trans_conv_kernels"):
            payload[key] = tuple(payload[key])
        return cls(**payload)


class Network:
    """An ordered layer stack over (batch, rows, 12) input matrices."""

    def __init__(self, layers: list[Layer], spec: ModelSpec, input_rows: int, seed: int) -> None:
        self.layers = layers
        self.spec = spec
        self.input_rows = input_rows
        self.seed = seed
        self.set_dropout_seed(seed)

    def forward(self, x: np.ndarray | Tensor, train: bool = False) -> Tensor:
        if not isinstance(x, Tensor):
            arr = np.asarray(x, dtype=np.float64)
            if arr.ndim == 2:
                arr = arr[None, :, :]
            if arr.shape[1] != self.input_rows or arr.shape[2] != TIME_STEPS:
                raise ValueError(
                    f"expected (batch, {self.input_rows}, {TIME_STEPS}) input, got {arr.shape}"
                )
            x = Tensor(np.swapaxes(arr, 1, 2))  # (batch, time, channels)
        out = x
        for layer in self.layers:
            out = layer.forward(out, train)
        return out

    def params(self) -> list[Tensor]:
        out: list[Tensor] = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params())

    def named_arrays(self) -> dict[str, np.ndarray]:
        arrays = {p.name: p.data for p in self.params()}
        for layer in self.layers:
            arrays.update(layer.state_arrays())
        return arrays

    def set_dropout_seed(self, seed: int) -> None:
        children = np.random.SeedSequence(seed).spawn(len(self.layers))
        for layer, child in zip(self.layers, children):
            layer.set_rng(np.random.default_rng(child))

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copy of everything a restore must bring back — parameters plus
        batch-norm running statistics."""
        return {name: arr.copy() for name, arr in self.named_arrays().items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for p in self.params():
            p.data = snapshot[p.name].copy()
        for layer in self.layers:
            for name, arr in layer.state_arrays().items():
                arr[...] = snapshot[name]

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        meta = {
            "spec": json.loads(self.spec.to_json()),
            "input_rows": self.input_rows,
            "seed": self.seed,
        }
        if extra:
            meta.update(extra)
        neuro.save_arrays(path, self.named_arrays(), extra=meta)

    @classmethod
    def load(cls, path: str | Path) -> "Network":
        arrays, extra = neuro.load_arrays(path)
        spec = ModelSpec.from_json(json.dumps(extra["spec"]))
        net = build(spec, input_rows=int(extra["input_rows"]), seed=int(extra["seed"]))
        for p in net.params():
            p.data = np.array(arrays[p.name], dtype=np.float64)
        for layer in net.layers:
            for name, arr in layer.state_arrays().items():
                arr[...] = arrays[name]
        return net


def _head_layers(spec: ModelSpec, fan_in: int, rng: np.random.Generator) -> list[Layer]:
    if spec.head is Head.CLASSIFICATION:
        return [Dense(fan_in, spec.n_classes, rng, name="head"), Softmax()]
    return [Dense(fan_in, 1, rng, name="head")]


def build(spec: ModelSpec, input_rows: int = 9, seed: int = 0) -> Network:
    """Construct a freshly initialized network; identical (spec, input_rows,
    seed) triples yield identical parameters."""
    if input_rows < 1:
        raise ValueError("input_rows must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    layers: list[Layer] = []

    if spec.arch is Arch.BASIC_CNN:
        layers.append(Conv1dSame(input_rows, spec.basic_filters, spec.basic_kernel, rng, name="conv1"))
        layers.append(MaxPool1d(spec.pool_window))
        layers.append(Flatten())
        flat = (TIME_STEPS // spec.pool_window) * spec.basic_filters
        layers.append(Dense(flat, spec.basic_dense_units, rng, name="dense1"))
        layers.append(ReLU())
        layers.extend(_head_layers(spec, spec.basic_dense_units, rng))
    elif spec.arch is Arch.DEEP_CNN:
        ch = input_rows
        for i, (filters, kernel) in enumerate(zip(spec.deep_filters, spec.deep_kernels), start=1):
            layers.append(Conv1dSame(ch, filters, kernel, rng, name=f"conv{i}"))
            layers.append(BatchNorm1d(filters, name=f"bn{i}"))
            layers.append(ReLU())
            ch = filters
        layers.append(GlobalMaxPool())
        layers.extend(_head_layers(spec, ch, rng))
    elif spec.arch in (Arch.CNN_TRANSFORMER, Arch.CNN_DEEP_TRANSFORMER):
        ch = input_rows
        for i, (filters, kernel) in enumerate(
            zip(spec.trans_conv_filters, spec.trans_conv_kernels), start=1
        ):
            layers.append(Conv1dSame(ch, filters, kernel, rng, name=f"conv{i}"))
            layers.append(BatchNorm1d(filters, name=f"bn{i}"))
            layers.append(ReLU())
            ch = filters
        for b in range(spec.n_transformer_blocks):
            layers.append(
                TransformerBlock(
                    ch,
                    spec.attention_heads,
                    spec.attention_head_size,
                    spec.transformer_dropout,
                    rng,
                    ffn_dim=spec.ffn_dim,
                    name=f"block{b + 1}",
                )
            )
        layers.append(GlobalMaxPool())
        layers.extend(_head_layers(spec, ch, rng))
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown architecture {spec.arch!r}")

    return Network(layers, spec, input_rows, seed)


def quantize_target(rating: float, n_classes: int = 100) -> int:
    """Rating in [0, 100] -> integer class: floor, clamped to the top class."""
    if not 0.0 <= rating <= 100.0:
        raise ValueError(f"rating {rating} outside [0, 100]")
    return min(int(math.floor(rating)), n_classes - 1)


def _ensure_scaled_matrix(series: CompanyYearSeries | np.ndarray) -> np.ndarray:
    if isinstance(series, CompanyYearSeries):
        if not series.scaled:
            raise ValueError(
                f"series for {series.company_id!r} is unscaled; fit a scaler on "
                "training data and apply it first"
            )
        return series.matrix
    return np.asarray(series, dtype=np.float64)


def predict_rating(network: Network, series: CompanyYearSeries | np.ndarray) -> float:
    """A single real-valued rating prediction in [0, 100]."""
    return float(predict_ratings(network, _ensure_scaled_matrix(series)[None, :, :])[0])


def predict_ratings(network: Network, matrices: np.ndarray) -> np.ndarray:
    """Batch form of :func:`predict_rating` on pre-scaled matrices.

    Classification nets answer the midpoint of the argmax class; regression
    nets clamp their raw output into [0, 100].
    """
    out = network.forward(matrices, train=False).data
    if network.spec.head is Head.CLASSIFICATION:
        return out.argmax(axis=1).astype(np.float64) + 0.5
    return np.clip(out[:, 0], 0.0, 100.0)
