"""Writers for the evaluation engine's artifact formats.

The wire formats are owned by the metrics package and re-implemented here
from their documented shape: a JSON sidecar next to a row-major
little-endian float32 payload for matrices, and line-delimited JSON for
records. Every file this package emits must pass `t2ieval validate`.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

import numpy as np


def write_matrix(stem: str, array, role: str, source_id: str = "") -> str:
    """Write ``<stem>.json`` + ``<stem>.bin``; returns the stem."""
    arr = np.ascontiguousarray(np.atleast_2d(np.asarray(array, dtype=np.float64)),
                               dtype="<f4")
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"matrix for {stem!r} must be 2-D and non-empty, got shape {arr.shape}")
    os.makedirs(os.path.dirname(os.path.abspath(stem)), exist_ok=True)
    sidecar = {
        "rows": int(arr.shape[0]),
        "cols": int(arr.shape[1]),
        "dtype": "f32le",
        "role": role,
        "format": "bin",
        "source_id": source_id,
    }
    with open(stem + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    with open(stem + ".bin", "wb") as fh:
        fh.write(arr.tobytes(order="C"))
    return stem


def write_records(path: str, rows: Iterable[dict]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")
    return path
