"""Losses and evaluation metrics.

The ``*_loss`` variants build differentiable graph nodes for training; the
plain functions are numpy-only metrics for reporting.
"""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor

__all__ = [
    "PROB_FLOOR",
    "scce",
    "scce_loss",
    "mse",
    "mse_loss",
    "mape",
    "mape_details",
    "sparse_accuracy",
]

PROB_FLOOR = 1e-12


def scce(probs: np.ndarray, classes: np.ndarray, floor: float = PROB_FLOOR) -> float:
    """Sparse categorical cross-entropy on probability rows."""
    probs = np.asarray(probs, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    if classes.min() < 0 or classes.max() >= probs.shape[1]:
        raise ValueError("class index out of range")
    picked = probs[np.arange(len(classes)), classes]
    return float(-np.log(np.maximum(picked, floor)).mean())


def scce_loss(probs: Tensor, classes: np.ndarray, floor: float = PROB_FLOOR) -> Tensor:
    return T.neg_log_pick_mean(probs, classes, floor)


def mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.shape != targets.shape:
        raise ValueError("length mismatch")
    return float(((predictions - targets) ** 2).mean())


def mse_loss(pred: Tensor, targets: np.ndarray) -> Tensor:
    targets = np.asarray(targets, dtype=np.float64).reshape(pred.shape)
    diff = T.sub(pred, targets)
    return T.mean_all(T.mul(diff, diff))


def mape_details(predictions: np.ndarray, targets: np.ndarray) -> tuple[float, int]:
    """Mean absolute percentage error ×100; zero targets are excluded and
    counted (percentage error is undefined there)."""
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.shape != targets.shape:
        raise ValueError("length mismatch")
    live = targets != 0.0
    excluded = int((~live).sum())
    if not live.any():
        raise ValueError("mape undefined: every target is zero")
    value = float((np.abs(predictions[live] - targets[live]) / np.abs(targets[live])).mean() * 100.0)
    return value, excluded


def mape(predictions: np.ndarray, targets: np.ndarray) -> float:
    return mape_details(predictions, targets)[0]


def sparse_accuracy(probs: np.ndarray, classes: np.ndarray) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    return float((probs.argmax(axis=1) == classes).mean())
