"""Plain and spherical k-means over article embeddings.

Both variants run the same four-step loop: pick k input points as initial
centroids, assign every point to its nearest centroid, recompute centroids
from the members, repeat until the objective stops improving.  The Euclidean
variant minimizes the sum of squared distances; the spherical variant works
on unit vectors and minimizes total cosine dissimilarity, keeping centroids
unit-norm after every update.

The per-iteration objective history is kept on the returned model so callers
(and tests) can assert it never increases.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import weak_label as _wl

__all__ = [
    "Metric",
    "ClusterModel",
    "kmeans",
    "assign",
    "elbow_scan",
    "silhouette",
    "save_model",
    "load_model",
    "write_assignments",
    "read_assignments",
    "DEFAULT_K",
]

DEFAULT_K = 6


class Metric(enum.Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d)
    metric: Metric
    sse: float  # final objective: SSE or total cosine dissimilarity
    iterations: int
    seed: int | None = None
    objective_history: tuple[float, ...] = ()


def _prepare(points: np.ndarray | Sequence[Sequence[float]], metric: Metric) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-D array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite values")
    if metric is Metric.COSINE:
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero vector not allowed under the cosine metric")
        pts = pts / norms[:, None]
    return pts


def _distances(pts: np.ndarray, centroids: np.ndarray, metric: Metric) -> np.ndarray:
    """Pairwise point-to-centroid dissimilarity (squared distance / 1 - cos)."""
    if metric is Metric.EUCLIDEAN:
        sq = (
            np.sum(pts**2, axis=1)[:, None]
            - 2.0 * pts @ centroids.T
            + np.sum(centroids**2, axis=1)[None, :]
        )
        return np.maximum(sq, 0.0)
    return 1.0 - pts @ centroids.T


def _init_centroids(
    pts: np.ndarray, k: int, rng: np.random.Generator, metric: Metric, plusplus: bool
) -> np.ndarray:
    n = pts.shape[0]
    if not plusplus:
        idx = rng.choice(n, size=k, replace=False)
        return pts[idx].copy()
    # k-means++ style: spread starts by distance-weighted sampling
    chosen = [int(rng.integers(n))]
    for _ in range(k - 1):
        d = _distances(pts, pts[chosen], metric).min(axis=1)
        d[chosen] = 0.0
        total = d.sum()
        if total <= 0.0:  # all remaining points coincide with a centroid
            remaining = [i for i in range(n) if i not in chosen]
            chosen.append(remaining[int(rng.integers(len(remaining)))])
            continue
        chosen.append(int(rng.choice(n, p=d / total)))
    return pts[chosen].copy()


def _repair_empty(
    assignments: np.ndarray, centroids: np.ndarray, pts: np.ndarray, metric: Metric
) -> None:
    """Give every empty cluster the point currently farthest from its centroid."""
    k = centroids.shape[0]
    counts = np.bincount(assignments, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        dist = _distances(pts, centroids, metric)[np.arange(len(pts)), assignments]
        # never steal the sole member of another cluster
        dist[counts[assignments] <= 1] = -np.inf
        far = int(np.argmax(dist))
        counts[assignments[far]] -= 1
        assignments[far] = empty
        centroids[empty] = pts[far]
        counts[empty] = 1


def _update_centroids(
    assignments: np.ndarray, centroids: np.ndarray, pts: np.ndarray, metric: Metric
) -> None:
    for j in range(centroids.shape[0]):
        members = pts[assignments == j]
        if members.shape[0] == 0:
            continue  # repaired already; keep current
        mean = members.mean(axis=0)
        if metric is Metric.COSINE:
            norm = np.linalg.norm(mean)
            if norm == 0.0:
                continue  # members cancel out; keep previous direction
            mean = mean / norm
        centroids[j] = mean


def kmeans(
    points: np.ndarray | Sequence[Sequence[float]],
    k: int,
    metric: Metric = Metric.EUCLIDEAN,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-4,
    init: Sequence[int] | str = "sample",
) -> tuple[ClusterModel, np.ndarray]:
    """Cluster ``points`` into ``k`` groups.

    ``init`` is either "sample" (k distinct input points chosen uniformly,
    the default), "kmeans++", or an explicit sequence of k distinct point
    indices for reproducible restarts.
    """
    pts = _prepare(points, metric)
    n = pts.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points n={n}")

    rng = np.random.default_rng(seed)
    if isinstance(init, str):
        if init not in ("sample", "kmeans++"):
            raise ValueError(f"unknown init {init!r}")
        centroids = _init_centroids(pts, k, rng, metric, plusplus=init == "kmeans++")
    else:
        idx = list(init)
        if len(idx) != k or len(set(idx)) != k:
            raise ValueError("init indices must be k distinct values")
        centroids = pts[idx].copy()

    history: list[float] = []
    assignments = np.zeros(n, dtype=np.int64)
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        assignments = np.argmin(_distances(pts, centroids, metric), axis=1)
        _repair_empty(assignments, centroids, pts, metric)
        _update_centroids(assignments, centroids, pts, metric)
        objective = float(
            _distances(pts, centroids, metric)[np.arange(n), assignments].sum()
        )
        history.append(objective)
        if len(history) >= 2:
            prev = history[-2]
            if abs(prev - objective) < tol * max(prev, 1e-12):
                break

    model = ClusterModel(
        k=k,
        centroids=centroids,
        metric=metric,
        sse=history[-1],
        iterations=iterations,
        seed=seed if isinstance(init, str) else None,
        objective_history=tuple(history),
    )
    return model, assignments


def assign(points: np.ndarray | Sequence[Sequence[float]], model: ClusterModel) -> np.ndarray:
    """Nearest-centroid labels for new points under the model's metric."""
    pts = _prepare(points, model.metric)
    return np.argmin(_distances(pts, model.centroids, model.metric), axis=1)


def elbow_scan(
    points: np.ndarray | Sequence[Sequence[float]],
    k_range: Iterable[int],
    metric: Metric = Metric.EUCLIDEAN,
    seed: int = 0,
    **kwargs,
) -> list[tuple[int, float]]:
    """Objective per k, all runs from the same seed; plot and pick the elbow."""
    out = []
    for k in k_range:
        model, _ = kmeans(points, k, metric=metric, seed=seed, **kwargs)
        out.append((k, model.sse))
    return out


def _pair_distances(pts: np.ndarray, metric: Metric) -> np.ndarray:
    if metric is Metric.EUCLIDEAN:
        sq = (
            np.sum(pts**2, axis=1)[:, None]
            - 2.0 * pts @ pts.T
            + np.sum(pts**2, axis=1)[None, :]
        )
        return np.sqrt(np.maximum(sq, 0.0))
    return 1.0 - pts @ pts.T


def silhouette(
    points: np.ndarray | Sequence[Sequence[float]],
    assignments: Sequence[int] | np.ndarray,
    metric: Metric = Metric.EUCLIDEAN,
) -> float:
    """Mean silhouette coefficient; intra-cluster distance vs nearest other
    cluster.  Euclidean uses plain (not squared) distance."""
    pts = _prepare(points, metric)
    labels = np.asarray(assignments, dtype=np.int64)
    if labels.shape[0] != pts.shape[0]:
        raise ValueError("one assignment per point required")
    unique = np.unique(labels)
    if unique.size < 2:
        raise ValueError("silhouette requires at least 2 clusters")

    dist = _pair_distances(pts, metric)
    scores = np.zeros(pts.shape[0])
    for i in range(pts.shape[0]):
        own = labels[i]
        own_mask = labels == own
        n_own = int(own_mask.sum())
        if n_own == 1:
            scores[i] = 0.0  # singleton convention
            continue
        a = dist[i, own_mask].sum() / (n_own - 1)
        b = min(dist[i, labels == other].mean() for other in unique if other != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


# --- persistence ----------------------------------------------------------

def save_model(path: str | Path, model: ClusterModel) -> None:
    """Centroids in the shared embedding binary format + JSON header."""
    path = Path(path)
    ids = [f"centroid_{j}" for j in range(model.k)]
    _wl.write_embeddings(path, ids, model.centroids)
    header = {
        "k": model.k,
        "metric": model.metric.value,
        "seed": model.seed,
        "sse": model.sse,
        "iterations": model.iterations,
    }
    path.with_name(path.name + ".json").write_text(
        json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> ClusterModel:
    path = Path(path)
    _, centroids = _wl.read_embeddings(path)
    header = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
    return ClusterModel(
        k=int(header["k"]),
        centroids=centroids,
        metric=Metric(header["metric"]),
        sse=float(header["sse"]),
        iterations=int(header["iterations"]),
        seed=header.get("seed"),
    )


def write_assignments(path: str | Path, article_ids: Sequence[str], labels: Sequence[int]) -> None:
    import csv

    if len(article_ids) != len(labels):
        raise ValueError("one label per article id required")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["article_id", "cluster_id"])
        for aid, lab in zip(article_ids, labels):
            writer.writerow([aid, int(lab)])


def read_assignments(path: str | Path) -> dict[str, int]:
    import csv

    out: dict[str, int] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["article_id", "cluster_id"]:
            raise ValueError(f"{path}: bad header {reader.fieldnames!r}")
        for row in reader:
            out[row["article_id"]] = int(row["cluster_id"])
    return out
