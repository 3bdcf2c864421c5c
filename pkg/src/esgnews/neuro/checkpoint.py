"""Checkpoint format: JSON manifest + one little-endian float64 blob.

The manifest lists every named array (parameters, batch-norm running stats,
optimizer moments) with its shape and offset into ``params.bin``; anything
else the caller wants to persist rides along under ``extra``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["save_arrays", "load_arrays", "MANIFEST_NAME", "BLOB_NAME"]

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "params.bin"


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], extra: dict | None = None) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    chunks = []
    for name in sorted(arrays):
        shape = list(np.asarray(arrays[name]).shape)
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")  # promotes 0-d to 1-d
        entries.append({"name": name, "shape": shape, "offset": offset})
        offset += arr.size
        chunks.append(arr.reshape(-1))
    manifest = {"entries": entries, "total": offset, "extra": extra or {}}
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    blob = np.concatenate(chunks) if chunks else np.zeros(0, dtype="<f8")
    (root / BLOB_NAME).write_bytes(blob.astype("<f8").tobytes())


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    root = Path(path)
    manifest = json.loads((root / MANIFEST_NAME).read_text(encoding="utf-8"))
    blob = np.frombuffer((root / BLOB_NAME).read_bytes(), dtype="<f8")
    if blob.size != manifest["total"]:
        raise ValueError(
            f"{root}: blob holds {blob.size} values, manifest expects {manifest['total']}"
        )
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["entries"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        chunk = blob[entry["offset"] : entry["offset"] + size]
        arrays[entry["name"]] = np.array(chunk, dtype=np.float64).reshape(entry["shape"])
    return arrays, manifest.get("extra", {})
