"""Monthly signal timeseries per company-year, standard scaling, datasets.

Each company-year becomes a matrix with one column per calendar month and
these rows, in order:

0. ``rel_noise``          — (relevant − noise) / total articles
1. ``pos_neg_relevant``   — (positive − negative) / labeled, relevant subset
2. ``pos_neg_noise``      — same for the noise subset (optional row)
3+ ``cluster_k``          — article count per semantic cluster k

Months without articles contribute zeros.  Ratio rows live in [−1, 1] before
scaling; cluster rows are nonnegative counts.  Scaling is per-row standard
scaling fitted on training data only; the fitted state carries a provenance
tag so downstream code can refuse test-fitted or unscaled inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalog import CapBand, Company, RatingRecord
from .corpus import ArticleRecord, Relevance, Sentiment

__all__ = [
    "SIGMA_FLOOR",
    "MonthlyCounts",
    "CompanyYearSeries",
    "ScalerState",
    "FeatureConfig",
    "row_labels",
    "rel_noise",
    "pos_neg",
    "cluster_series",
    "monthly_counts",
    "assemble",
    "fit_scaler",
    "apply_scaler",
    "save_dataset",
    "load_dataset",
    "dataset_to_csv",
]

SIGMA_FLOOR = 1e-8
MONTHS = 12


@dataclass(frozen=True)
class FeatureConfig:
    k_clusters: int = 6
    include_noise_sentiment: bool = True  # False -> 8-row variant


def row_labels(k_clusters: int = 6, include_noise_sentiment: bool = True) -> list[str]:
    labels = ["rel_noise", "pos_neg_relevant"]
    if include_noise_sentiment:
        labels.append("pos_neg_noise")
    labels.extend(f"cluster_{j}" for j in range(k_clusters))
    return labels


@dataclass(frozen=True)
class MonthlyCounts:
    company_id: str
    month_index: int  # 1..12
    n_total: int
    n_relevant: int
    n_noise: int
    n_pos_rel: int
    n_neg_rel: int
    n_pos_noise: int
    n_neg_noise: int
    cluster_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.month_index <= MONTHS:
            raise ValueError(f"month_index {self.month_index} outside [1, {MONTHS}]")
        if self.n_relevant + self.n_noise != self.n_total:
            raise ValueError("relevant + noise must equal total")
        if self.n_pos_rel + self.n_neg_rel != self.n_relevant:
            raise ValueError("relevant sentiment counts must sum to relevant count")
        if self.n_pos_noise + self.n_neg_noise != self.n_noise:
            raise ValueError("noise sentiment counts must sum to noise count")
        if sum(self.cluster_counts) > self.n_total:
            raise ValueError("cluster counts exceed total articles")
        if min(
            self.n_total, self.n_relevant, self.n_noise,
            self.n_pos_rel, self.n_neg_rel, self.n_pos_noise, self.n_neg_noise,
            *(self.cluster_counts or (0,)),
        ) < 0:
            raise ValueError("counts must be nonnegative")


@dataclass(frozen=True)
class CompanyYearSeries:
    company_id: str
    year: int
    matrix: np.ndarray  # (rows, 12) float64
    target: float
    cap_band: CapBand = CapBand.UNKNOWN
    scaled: bool = False

    def __post_init__(self) -> None:
        m = self.matrix
        if m.ndim != 2 or m.shape[1] != MONTHS:
            raise ValueError(f"matrix must be (rows, {MONTHS}), got {m.shape}")


def rel_noise(counts: MonthlyCounts) -> float:
    """Relevant-minus-noise fraction for one month; 0 when no articles."""
    if counts.n_total == 0:
        return 0.0
    return (counts.n_relevant - counts.n_noise) / counts.n_total


def pos_neg(positive: int, negative: int) -> float:
    """Positive-minus-negative fraction within a subset; 0 when empty."""
    total = positive + negative
    if total == 0:
        return 0.0
    return (positive - negative) / total


def cluster_series(records: Iterable[ArticleRecord], k_clusters: int) -> np.ndarray:
    """(K, 12) counts of one company-year's articles per cluster and month.

    Every record must carry a cluster id in [0, K).
    """
    out = np.zeros((k_clusters, MONTHS), dtype=np.int64)
    for rec in records:
        if rec.cluster_id is None or not 0 <= rec.cluster_id < k_clusters:
            raise ValueError(
                f"article {rec.article_id!r}: cluster_id {rec.cluster_id!r} outside [0, {k_clusters})"
            )
        out[rec.cluster_id, rec.month.month - 1] += 1
    return out


def monthly_counts(
    records: Iterable[ArticleRecord], company_id: str, k_clusters: int
) -> list[MonthlyCounts]:
    """Aggregate one company-year's records into 12 monthly count rows.

    Records must carry relevance and sentiment labels; cluster ids are
    counted when present (clustering may be restricted to a subset).
    """
    per_month: list[dict[str, int]] = [
        {
            "n_total": 0, "n_relevant": 0, "n_noise": 0,
            "n_pos_rel": 0, "n_neg_rel": 0, "n_pos_noise": 0, "n_neg_noise": 0,
        }
        for _ in range(MONTHS)
    ]
    clusters = np.zeros((MONTHS, k_clusters), dtype=np.int64)
    for rec in records:
        if rec.relevance_label is None:
            raise ValueError(f"article {rec.article_id!r}: missing relevance label")
        if rec.sentiment_label is None:
            raise ValueError(f"article {rec.article_id!r}: missing sentiment label")
        m = rec.month.month - 1
        bucket = per_month[m]
        bucket["n_total"] += 1
        relevant = rec.relevance_label is Relevance.RELEVANT
        positive = rec.sentiment_label is Sentiment.POSITIVE
        if relevant:
            bucket["n_relevant"] += 1
            bucket["n_pos_rel" if positive else "n_neg_rel"] += 1
        else:
            bucket["n_noise"] += 1
            bucket["n_pos_noise" if positive else "n_neg_noise"] += 1
        if rec.cluster_id is not None:
            if not 0 <= rec.cluster_id < k_clusters:
                raise ValueError(
                    f"article {rec.article_id!r}: cluster_id {rec.cluster_id} outside [0, {k_clusters})"
                )
            clusters[m, rec.cluster_id] += 1
    return [
        MonthlyCounts(
            company_id=company_id,
            month_index=m + 1,
            cluster_counts=tuple(int(c) for c in clusters[m]),
            **per_month[m],
        )
        for m in range(MONTHS)
    ]


def assemble(
    records: Iterable[ArticleRecord],
    ratings: Iterable[RatingRecord],
    year: int,
    k_clusters: int = 6,
    companies: Sequence[Company] | None = None,
    include_noise_sentiment: bool = True,
) -> list[CompanyYearSeries]:
    """One matrix per company with a rating for ``year``.

    Input records should already be pruned; a company appearing in the
    records without a rating for the year is an internal-consistency error.
    """
    ratings_map = {r.company_id: r.rating for r in ratings if r.year == year}
    bands = {c.id: c.cap_band for c in companies} if companies else {}

    by_company: dict[str, list[ArticleRecord]] = {}
    for rec in records:
        if rec.month.year == year:
            by_company.setdefault(rec.company_id, []).append(rec)

    out: list[CompanyYearSeries] = []
    for company_id in sorted(by_company):
        if company_id not in ratings_map:
            raise ValueError(f"company {company_id!r} has records but no rating for {year}")
        counts = monthly_counts(by_company[company_id], company_id, k_clusters)
        rows = [
            [rel_noise(c) for c in counts],
            [pos_neg(c.n_pos_rel, c.n_neg_rel) for c in counts],
        ]
        if include_noise_sentiment:
            rows.append([pos_neg(c.n_pos_noise, c.n_neg_noise) for c in counts])
        cluster_rows = np.array([c.cluster_counts for c in counts], dtype=np.float64).T
        matrix = np.vstack([np.array(rows, dtype=np.float64), cluster_rows])
        out.append(
            CompanyYearSeries(
                company_id=company_id,
                year=year,
                matrix=matrix,
                target=ratings_map[company_id],
                cap_band=bands.get(company_id, CapBand.UNKNOWN),
            )
        )
    return out


@dataclass(frozen=True)
class ScalerState:
    mean: np.ndarray  # (rows,)
    std: np.ndarray   # (rows,), floored at SIGMA_FLOOR
    fitted_on: str    # provenance tag, e.g. "train"

    def __post_init__(self) -> None:
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean/std must be matching 1-D arrays")
        if np.any(self.std <= 0.0):
            raise ValueError("std must be positive (floor applies at fit time)")


def fit_scaler(train: Sequence[CompanyYearSeries], provenance: str = "train") -> ScalerState:
    """Per-row mean/std over all training companies and months."""
    if not train:
        raise ValueError("cannot fit a scaler on an empty training set")
    stacked = np.concatenate([s.matrix for s in train], axis=1)  # (rows, n*12)
    mean = stacked.mean(axis=1)
    std = stacked.std(axis=1)  # population std; constant rows hit the floor
    std = np.maximum(std, SIGMA_FLOOR)
    return ScalerState(mean=mean, std=std, fitted_on=provenance)


def apply_scaler(state: ScalerState, series: CompanyYearSeries) -> CompanyYearSeries:
    if series.matrix.shape[0] != state.mean.shape[0]:
        raise ValueError(
            f"scaler fitted for {state.mean.shape[0]} rows, series has {series.matrix.shape[0]}"
        )
    matrix = (series.matrix - state.mean[:, None]) / state.std[:, None]
    return replace(series, matrix=matrix, scaled=True)


# --- persistence ----------------------------------------------------------

def save_dataset(
    path: str | Path,
    series: Sequence[CompanyYearSeries],
    year: int,
    k_clusters: int,
    include_noise_sentiment: bool = True,
    scaler: ScalerState | None = None,
) -> None:
    """JSON header + one little-endian float64 matrix blob."""
    if not series:
        raise ValueError("refusing to save an empty dataset")
    rows = series[0].matrix.shape[0]
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    header = {
        "year": year,
        "k_clusters": k_clusters,
        "row_order": row_labels(k_clusters, include_noise_sentiment),
        "include_noise_sentiment": include_noise_sentiment,
        "scaled": all(s.scaled for s in series),
        "scaler": None
        if scaler is None
        else {
            "mean": [float(x) for x in scaler.mean],
            "std": [float(x) for x in scaler.std],
            "fitted_on": scaler.fitted_on,
        },
        "companies": [
            {"company_id": s.company_id, "target": s.target, "cap_band": s.cap_band.value}
            for s in series
        ],
    }
    for s in series:
        if s.matrix.shape[0] != rows:
            raise ValueError("all matrices must have the same row count")
    (root / "header.json").write_text(
        json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    blob = np.stack([s.matrix for s in series]).astype("<f8")
    (root / "matrices.bin").write_bytes(blob.tobytes())


def load_dataset(path: str | Path) -> tuple[list[CompanyYearSeries], dict]:
    root = Path(path)
    header = json.loads((root / "header.json").read_text(encoding="utf-8"))
    rows = len(header["row_order"])
    count = len(header["companies"])
    blob = np.frombuffer((root / "matrices.bin").read_bytes(), dtype="<f8")
    matrices = blob.reshape(count, rows, MONTHS).astype(np.float64)
    series = [
        CompanyYearSeries(
            company_id=entry["company_id"],
            year=int(header["year"]),
            matrix=matrices[i],
            target=float(entry["target"]),
            cap_band=CapBand(entry["cap_band"]),
            scaled=bool(header["scaled"]),
        )
        for i, entry in enumerate(header["companies"])
    ]
    return series, header


def dataset_to_csv(path: str | Path, series: Sequence[CompanyYearSeries],
                   k_clusters: int = 6, include_noise_sentiment: bool = True) -> None:
    """Long-format dump for eyeballing: company, year, row, month, value."""
    import csv

    labels = row_labels(k_clusters, include_noise_sentiment)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["company_id", "year", "row", "month", "value"])
        for s in series:
            for r, label in enumerate(labels):
                for m in range(MONTHS):
                    writer.writerow([s.company_id, s.year, label, m + 1, repr(float(s.matrix[r, m]))])
