"""Independent naive reference implementations shared across test modules.

Everything here is deliberately written the slow, obvious way — python loops
over explicit definitions — so the fast library code has something honest to
be checked against.
"""
import itertools
from datetime import date

import numpy as np


# --- k-means ---------------------------------------------------------------

def naive_dissimilarity(pts: np.ndarray, cents: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        return ((pts[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
    return 1.0 - pts @ cents.T


def naive_lloyd(pts: np.ndarray, init_idx, metric: str, iters: int = 300) -> float:
    """Textbook Lloyd from an explicit point-index init; returns the final
    objective (sum of squared distances / total cosine dissimilarity)."""
    cents = pts[list(init_idx)].copy()
    for _ in range(iters):
        assign = naive_dissimilarity(pts, cents, metric).argmin(axis=1)
        new = cents.copy()
        for j in range(cents.shape[0]):
            members = pts[assign == j]
            if len(members):
                mu = members.mean(axis=0)
                if metric == "cosine":
                    norm = np.linalg.norm(mu)
                    if norm > 0:
                        mu = mu / norm
                new[j] = mu
        if np.allclose(new, cents, atol=1e-13):
            cents = new
            break
        cents = new
    d = naive_dissimilarity(pts, cents, metric)
    assign = d.argmin(axis=1)
    return float(d[np.arange(len(pts)), assign].sum())


def exhaustive_restart_objective(pts: np.ndarray, k: int, metric: str) -> float:
    """Best objective over every C(n, k) choice of initial points."""
    return min(
        naive_lloyd(pts, combo, metric)
        for combo in itertools.combinations(range(len(pts)), k)
    )


def sample_cluster_instance(rng: np.random.Generator):
    """Small random instance: n <= 8, d <= 3, k <= 3; cosine rows unit-norm."""
    k = int(rng.integers(1, 4))
    n = int(rng.integers(max(k, 2), 9))
    d = int(rng.integers(1, 4))
    pts = rng.normal(size=(n, d))
    if rng.random() < 0.2 and n >= 3:  # occasional duplicate point
        pts[1] = pts[0]
    metric = "euclidean" if rng.random() < 0.5 else "cosine"
    if metric == "cosine":
        while np.any(np.linalg.norm(pts, axis=1) < 1e-6):
            pts = rng.normal(size=(n, d))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return pts, k, metric


# --- monthly feature matrix --------------------------------------------------

def naive_monthly_matrix(records, year: int, k_clusters: int, include_noise_sentiment: bool):
    """Count-based reference for the per-company-year feature matrix.

    Rows: rel-noise ratio, pos-neg over relevant, (pos-neg over noise,)
    then one raw count row per cluster id.  Zero-article months stay 0.
    Cluster counts include every record that carries a cluster id.
    """
    n_rows = (3 if include_noise_sentiment else 2) + k_clusters
    mat = np.zeros((n_rows, 12))
    for month_idx in range(12):
        month = date(year, month_idx + 1, 1)
        in_month = [r for r in records if r.month == month]
        total = len(in_month)
        if total == 0:
            continue
        relevant = [r for r in in_month if r.relevance_label.value == "relevant"]
        noise = [r for r in in_month if r.relevance_label.value == "noise"]
        mat[0, month_idx] = (len(relevant) - len(noise)) / total

        def posneg(subset):
            pos = sum(1 for r in subset if r.sentiment_label.value == "positive")
            neg = sum(1 for r in subset if r.sentiment_label.value == "negative")
            labeled = pos + neg
            return 0.0 if labeled == 0 else (pos - neg) / labeled

        mat[1, month_idx] = posneg(relevant)
        row = 2
        if include_noise_sentiment:
            mat[2, month_idx] = posneg(noise)
            row = 3
        for cid in range(k_clusters):
            mat[row + cid, month_idx] = sum(
                1 for r in in_month if r.cluster_id == cid
            )
    return mat
