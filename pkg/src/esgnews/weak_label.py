"""Relevance labeling from externally computed text embeddings.

An article counts as ESG-relevant when the cosine similarity between its
embedding and the closest of the category-definition embeddings exceeds a
threshold (default 0.1, strictly greater).  Externally produced classifier
probabilities and sentiment labels are attached from CSV files and, when
present, override the similarity-based label.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import ArticleRecord, Relevance, Sentiment

__all__ = [
    "EMBEDDING_MAGIC",
    "EmbeddingTable",
    "WeakLabelConfig",
    "cosine",
    "weak_label",
    "label_records",
    "attach_predictions",
    "write_embeddings",
    "read_embeddings",
    "sidecar_path",
]

EMBEDDING_MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sII")  # magic, dim, count


@dataclass(frozen=True)
class WeakLabelConfig:
    threshold: float = 0.1
    aggregation: str = "max"  # "max" (default) or "mean" over definitions

    def __post_init__(self) -> None:
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [-1, 1]")
        if self.aggregation not in ("max", "mean"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


class EmbeddingTable:
    """Article embeddings plus the category-definition vectors.

    Any definition count is accepted; 10 is the expected layout (one vector
    per ESG category description).
    """

    def __init__(
        self,
        dim: int,
        entries: dict[str, np.ndarray],
        definition_vectors: Sequence[np.ndarray],
    ) -> None:
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.entries = {k: np.asarray(v, dtype=np.float64) for k, v in entries.items()}
        self.definition_vectors = [np.asarray(v, dtype=np.float64) for v in definition_vectors]
        for key, vec in self.entries.items():
            if vec.shape != (dim,):
                raise ValueError(f"embedding {key!r} has shape {vec.shape}, want ({dim},)")
        if not self.definition_vectors:
            raise ValueError("at least one definition vector required")
        for i, vec in enumerate(self.definition_vectors):
            if vec.shape != (dim,):
                raise ValueError(f"definition #{i} has shape {vec.shape}, want ({dim},)")

    @classmethod
    def from_files(cls, embeddings_path: str | Path, definitions_path: str | Path) -> "EmbeddingTable":
        ids, vectors = read_embeddings(embeddings_path)
        def_ids, def_vectors = read_embeddings(definitions_path)
        if vectors.shape[1] != def_vectors.shape[1]:
            raise ValueError(
                f"embedding dim {vectors.shape[1]} != definition dim {def_vectors.shape[1]}"
            )
        entries = {aid: vectors[i] for i, aid in enumerate(ids)}
        return cls(vectors.shape[1], entries, list(def_vectors))


def cosine(a: np.ndarray | Sequence[float], b: np.ndarray | Sequence[float]) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def weak_label(
    article_vec: np.ndarray | Sequence[float],
    table: EmbeddingTable,
    cfg: WeakLabelConfig = WeakLabelConfig(),
) -> Relevance:
    """Relevant iff the aggregated similarity is strictly above the threshold."""
    vec = np.asarray(article_vec, dtype=np.float64)
    if vec.shape != (table.dim,):
        raise ValueError(f"article vector has shape {vec.shape}, want ({table.dim},)")
    sims = [cosine(vec, defn) for defn in table.definition_vectors]
    score = max(sims) if cfg.aggregation == "max" else float(np.mean(sims))
    return Relevance.RELEVANT if score > cfg.threshold else Relevance.NOISE


def label_records(
    records: Iterable[ArticleRecord],
    table: EmbeddingTable,
    cfg: WeakLabelConfig = WeakLabelConfig(),
) -> list[ArticleRecord]:
    out = []
    for rec in records:
        try:
            vec = table.entries[rec.article_id]
        except KeyError:
            raise KeyError(f"no embedding for article {rec.article_id!r}") from None
        out.append(rec.with_labels(relevance_label=weak_label(vec, table, cfg)))
    return out


def attach_predictions(
    records: Iterable[ArticleRecord],
    relevance_file: str | Path | None = None,
    sentiment_file: str | Path | None = None,
) -> list[ArticleRecord]:
    """Attach classifier probabilities / sentiment labels from CSV.

    A supplied probability overrides the similarity label: >= 0.5 means
    Relevant (the 0.5 tie goes to Relevant).  Records not mentioned in the
    files keep whatever labels they had.
    """
    records = list(records)
    by_id = {rec.article_id: i for i, rec in enumerate(records)}

    if relevance_file is not None:
        for line_no, row in _read_csv(relevance_file, ["article_id", "relevance_prob"]):
            aid = row["article_id"]
            if aid not in by_id:
                raise KeyError(f"{relevance_file}:{line_no}: unknown article_id {aid!r}")
            prob = float(row["relevance_prob"])
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"{relevance_file}:{line_no}: probability {prob} outside [0,1]")
            label = Relevance.RELEVANT if prob >= 0.5 else Relevance.NOISE
            idx = by_id[aid]
            records[idx] = records[idx].with_labels(relevance_prob=prob, relevance_label=label)

    if sentiment_file is not None:
        for line_no, row in _read_csv(sentiment_file, ["article_id", "sentiment"]):
            aid = row["article_id"]
            if aid not in by_id:
                raise KeyError(f"{sentiment_file}:{line_no}: unknown article_id {aid!r}")
            try:
                sentiment = Sentiment(row["sentiment"])
            except ValueError:
                raise ValueError(
                    f"{sentiment_file}:{line_no}: sentiment must be positive|negative, "
                    f"got {row['sentiment']!r}"
                ) from None
            idx = by_id[aid]
            records[idx] = records[idx].with_labels(sentiment_label=sentiment)

    return records


def _read_csv(path: str | Path, header: list[str]):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != header:
            raise ValueError(f"{path}: expected header {','.join(header)!r}, got {reader.fieldnames!r}")
        for row in reader:
            yield reader.line_num, row


# --- binary embedding format ----------------------------------------------
#
# header: magic "EMB1", uint32 dim, uint32 count (little-endian)
# payload: count * dim float32, little-endian, row-major
# sidecar: <path>.ids.csv with header "article_id,row"

def sidecar_path(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".ids.csv")


def write_embeddings(path: str | Path, ids: Sequence[str], vectors: np.ndarray) -> None:
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim != 2:
        raise ValueError("vectors must be a 2-D array")
    if len(ids) != vectors.shape[0]:
        raise ValueError(f"{len(ids)} ids for {vectors.shape[0]} vectors")
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(EMBEDDING_MAGIC, vectors.shape[1], vectors.shape[0]))
        fh.write(vectors.astype("<f4").tobytes())
    with sidecar_path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["article_id", "row"])
        for i, aid in enumerate(ids):
            writer.writerow([aid, i])


def read_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, dim, count = _HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * dim * count
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    vectors = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    ids = [""] * count
    with sidecar_path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["article_id", "row"]:
            raise ValueError(f"{sidecar_path(path)}: bad sidecar header {reader.fieldnames!r}")
        seen = 0
        for row in reader:
            idx = int(row["row"])
            if not 0 <= idx < count:
                raise ValueError(f"{sidecar_path(path)}: row index {idx} out of range")
            ids[idx] = row["article_id"]
            seen += 1
    if seen != count:
        raise ValueError(f"{sidecar_path(path)}: {seen} ids for {count} vectors")
    return ids, np.array(vectors, dtype=np.float64)
