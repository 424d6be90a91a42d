"""File formats decoupling metric math from model inference.

Two interchange formats are defined:

* matrices: a UTF-8 JSON sidecar ``<name>.json`` with keys
  ``rows/cols/dtype/role/format/source_id`` next to a row-major
  little-endian float32 payload ``<name>.bin`` (or ``<name>.csv`` when the
  sidecar declares ``"format": "csv"``);
* records: line-delimited JSON, one record per line.

Matrices are stored as float32 and upcast to float64 inside the metric
code. Validation is total: every file either loads cleanly or raises a
typed error naming the offending row or line.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import FormatError, IoError, ParseError, ValidationError

MATRIX_ROLES = ("probabilities", "logits", "features")
RECORD_KINDS = ("detection", "retrieval", "triplet", "count")

# f32 softmax outputs from external extractors rarely sum exactly to 1.
PROB_ROW_SUM_TOL = 1e-4


@dataclass(frozen=True)
class MatrixArtifact:
    """Dense row-major float32 matrix with provenance metadata."""

    rows: int
    cols: int
    role: str
    data: np.ndarray
    source_id: str = ""

    dtype = "f32le"

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", arr)
        _validate_matrix(self)

    @classmethod
    def from_array(cls, data, role: str, source_id: str = "") -> "MatrixArtifact":
        arr = np.atleast_2d(np.asarray(data, dtype=np.float32))
        return cls(rows=arr.shape[0], cols=arr.shape[1], role=role,
                   data=arr, source_id=source_id)

    def values(self) -> np.ndarray:
        """Return the payload upcast to float64 for metric math."""
        return self.data.astype(np.float64)


def _validate_matrix(art: MatrixArtifact) -> None:
    if art.role not in MATRIX_ROLES:
        raise ValidationError(f"unknown matrix role {art.role!r}")
    if art.rows < 1 or art.cols < 1:
        raise ValidationError(f"matrix must be at least 1x1, got {art.rows}x{art.cols}")
    if art.data.shape != (art.rows, art.cols):
        raise ValidationError(
            f"data shape {art.data.shape} does not match declared {art.rows}x{art.cols}")
    finite = np.isfinite(art.data)
    if not finite.all():
        bad = int(np.argwhere(~finite)[0][0])
        raise ValidationError(f"row {bad}: non-finite entry")
    if art.role == "probabilities":
        if (art.data < 0).any():
            bad = int(np.argwhere((art.data < 0).any(axis=1))[0][0])
            raise ValidationError(f"row {bad}: negative probability entry")
        sums = art.data.astype(np.float64).sum(axis=1)
        off = np.abs(sums - 1.0) > PROB_ROW_SUM_TOL
        if off.any():
            bad = int(np.argmax(off))
            raise ValidationError(
                f"row {bad}: probabilities sum to {sums[bad]:.6g}, expected 1 within {PROB_ROW_SUM_TOL}")


def _stem(path: str) -> str:
    for suffix in (".json", ".bin", ".csv"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def save_matrix(artifact: MatrixArtifact, path: str) -> None:
    """Write ``<path>.json`` + ``<path>.bin``; round-trips bit-exactly."""
    stem = _stem(path)
    sidecar = {
        "rows": artifact.rows,
        "cols": artifact.cols,
        "dtype": artifact.dtype,
        "role": artifact.role,
        "format": "bin",
        "source_id": artifact.source_id,
    }
    try:
        os.makedirs(os.path.dirname(os.path.abspath(stem)), exist_ok=True)
        with open(stem + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
        with open(stem + ".bin", "wb") as fh:
            fh.write(artifact.data.astype("<f4").tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write matrix {stem!r}: {exc}") from exc


def load_matrix(path: str) -> MatrixArtifact:
    """Load a sidecar-described matrix, validating every type invariant."""
    stem = _stem(path)
    sidecar_path = stem + ".json"
    if not os.path.exists(sidecar_path):
        raise FormatError(f"missing sidecar {sidecar_path!r}")
    try:
        with open(sidecar_path, "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read sidecar {sidecar_path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"sidecar {sidecar_path!r} is not valid JSON: {exc}") from exc
    if not isinstance(sidecar, dict):
        raise FormatError(f"sidecar {sidecar_path!r} must be a JSON object")
    for key in ("rows", "cols", "role"):
        if key not in sidecar:
            raise FormatError(f"sidecar {sidecar_path!r} missing key {key!r}")
    rows, cols = sidecar["rows"], sidecar["cols"]
    if not isinstance(rows, int) or not isinstance(cols, int):
        raise FormatError(f"sidecar {sidecar_path!r}: rows/cols must be integers")
    dtype = sidecar.get("dtype", "f32le")
    if dtype != "f32le":
        raise FormatError(f"sidecar {sidecar_path!r}: unsupported dtype {dtype!r}")
    fmt = sidecar.get("format", "bin")

    if fmt == "bin":
        data = _read_bin(stem + ".bin", rows, cols)
    elif fmt == "csv":
        data = _read_csv(stem + ".csv", rows, cols)
    else:
        raise FormatError(f"sidecar {sidecar_path!r}: unsupported format {fmt!r}")

    return MatrixArtifact(rows=rows, cols=cols, role=sidecar["role"], data=data,
                          source_id=str(sidecar.get("source_id", "")))


def _read_bin(path: str, rows: int, cols: int) -> np.ndarray:
    if not os.path.exists(path):
        raise FormatError(f"missing binary {path!r}")
    try:
        with open(path, "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read binary {path!r}: {exc}") from exc
    expected = rows * cols * 4
    if len(payload) != expected:
        raise FormatError(
            f"binary {path!r}: expected {expected} bytes ({rows}x{cols} f32le), found {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols)


def _read_csv(path: str, rows: int, cols: int) -> np.ndarray:
    if not os.path.exists(path):
        raise FormatError(f"missing csv {path!r}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    except OSError as exc:
        raise IoError(f"cannot read csv {path!r}: {exc}") from exc
    if not lines:
        raise FormatError(f"csv {path!r} is empty, expected header + {rows} rows")
    body = lines[1:]  # header row carries column names only
    if len(body) != rows:
        raise FormatError(f"csv {path!r}: expected {rows} data rows, found {len(body)}")
    out = np.empty((rows, cols), dtype=np.float32)
    for i, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != cols:
            raise FormatError(f"csv {path!r} row {i}: expected {cols} columns, found {len(parts)}")
        try:
            out[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"csv {path!r} row {i}: {exc}") from exc
    return out


@dataclass(frozen=True)
class Detection:
    label: str
    score: float


@dataclass(frozen=True)
class DetectionRecord:
    """Detector output for one generated image with its expected class."""

    image_id: str
    expected_class: str
    detections: tuple[Detection, ...] = ()


@dataclass(frozen=True)
class RetrievalRecord:
    """Similarities of one image against its caption plus distractors."""

    query_id: str
    gt_index: int
    similarities: tuple[float, ...]


@dataclass(frozen=True)
class PositionalTriplet:
    """Matched/mismatched caption scores for one positional word query."""

    word: str
    triplet_id: str
    sim_matched: float
    sim_mismatched: float


@dataclass(frozen=True)
class CountRecord:
    """Ground-truth and predicted per-class object counts for one caption."""

    caption_id: str
    gt_counts: dict[str, float] = field(default_factory=dict)
    pred_counts: dict[str, float] = field(default_factory=dict)


def _require(obj: dict, key: str, line: int):
    if key not in obj:
        raise ValidationError(f"missing key {key!r}", line=line)
    return obj[key]


def _as_finite_float(value, what: str, line: int) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} is not a number: {value!r}", line=line) from None
    if not math.isfinite(out):
        raise ValidationError(f"{what} is not finite: {value!r}", line=line)
    return out


def _parse_detection(obj: dict, line: int) -> DetectionRecord:
    image_id = str(_require(obj, "image_id", line))
    expected = str(_require(obj, "expected_class", line))
    if not expected:
        raise ValidationError("expected_class is empty", line=line)
    raw = _require(obj, "detections", line)
    if not isinstance(raw, list):
        raise ValidationError("detections must be a list", line=line)
    dets = []
    for d in raw:
        if not isinstance(d, dict):
            raise ValidationError("detection entries must be objects", line=line)
        score = _as_finite_float(_require(d, "score", line), "detection score", line)
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"detection score {score} outside [0, 1]", line=line)
        dets.append(Detection(label=str(_require(d, "class", line)), score=score))
    return DetectionRecord(image_id=image_id, expected_class=expected, detections=tuple(dets))


def _parse_retrieval(obj: dict, line: int) -> RetrievalRecord:
    query_id = str(_require(obj, "query_id", line))
    sims = _require(obj, "similarities", line)
    if not isinstance(sims, list) or len(sims) < 2:
        raise ValidationError("similarities must be a list with at least 2 entries", line=line)
    scores = tuple(_as_finite_float(s, "similarity", line) for s in sims)
    gt_index = _require(obj, "gt_index", line)
    if not isinstance(gt_index, int) or not 0 <= gt_index < len(scores):
        raise ValidationError(
            f"gt_index {gt_index!r} outside [0, {len(scores)})", line=line)
    return RetrievalRecord(query_id=query_id, gt_index=gt_index, similarities=scores)


def _parse_triplet(obj: dict, line: int) -> PositionalTriplet:
    return PositionalTriplet(
        word=str(_require(obj, "word", line)),
        triplet_id=str(_require(obj, "triplet_id", line)),
        sim_matched=_as_finite_float(_require(obj, "sim_matched", line), "sim_matched", line),
        sim_mismatched=_as_finite_float(
            _require(obj, "sim_mismatched", line), "sim_mismatched", line),
    )


def _parse_counts(obj: dict, key: str, line: int, required_nonempty: bool) -> dict[str, float]:
    raw = _require(obj, key, line)
    if not isinstance(raw, dict):
        raise ValidationError(f"{key} must be an object", line=line)
    if required_nonempty and not raw:
        raise ValidationError(f"{key} is empty", line=line)
    out = {}
    for cls, count in raw.items():
        value = _as_finite_float(count, f"{key}[{cls!r}]", line)
        if value < 0:
            raise ValidationError(f"{key}[{cls!r}] is negative: {value}", line=line)
        out[str(cls)] = value
    return out


def _parse_count(obj: dict, line: int) -> CountRecord:
    return CountRecord(
        caption_id=str(_require(obj, "caption_id", line)),
        gt_counts=_parse_counts(obj, "gt_counts", line, required_nonempty=True),
        pred_counts=_parse_counts(obj, "pred_counts", line, required_nonempty=False),
    )


_PARSERS = {
    "detection": _parse_detection,
    "retrieval": _parse_retrieval,
    "triplet": _parse_triplet,
    "count": _parse_count,
}

_KIND_KEYS = {
    "detection": {"image_id", "expected_class", "detections"},
    "retrieval": {"query_id", "gt_index", "similarities"},
    "triplet": {"word", "triplet_id", "sim_matched", "sim_mismatched"},
    "count": {"caption_id", "gt_counts", "pred_counts"},
}


def iter_jsonl(path: str) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) pairs; blank lines are skipped."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path!r}: {exc}") from exc
    with fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            if not isinstance(obj, dict):
                raise ParseError("record must be a JSON object", line=line_no)
            yield line_no, obj


def load_records(path: str, kind: str):
    """Stream validated records of one kind from a .jsonl file, in file order."""
    if kind not in _PARSERS:
        raise ValidationError(f"unknown record kind {kind!r}, expected one of {RECORD_KINDS}")
    parser = _PARSERS[kind]
    for line_no, obj in iter_jsonl(path):
        yield parser(obj, line_no)


def write_jsonl(path: str, rows: Iterable[dict]) -> None:
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False))
                fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path!r}: {exc}") from exc


def sniff_record_kind(path: str) -> str:
    """Guess the record kind of a .jsonl file from its first record's keys."""
    for _, obj in iter_jsonl(path):
        keys = set(obj)
        for kind, required in _KIND_KEYS.items():
            if required <= keys:
                return kind
        raise FormatError(f"{path!r}: keys {sorted(keys)} match no known record kind")
    raise FormatError(f"{path!r} is empty, cannot infer record kind")


def load_labels(path: str) -> list[int]:
    """Load a label vector: a JSON array of ints, or one integer per line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read labels {path!r}: {exc}") from exc
    stripped = text.strip()
    if stripped.startswith("["):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise FormatError(f"labels {path!r} is not valid JSON: {exc}") from exc
    else:
        raw = [tok for tok in stripped.split() if tok]
    labels = []
    for i, item in enumerate(raw):
        try:
            value = int(item)
        except (TypeError, ValueError):
            raise ValidationError(f"label {i} is not an integer: {item!r}") from None
        if value < 0:
            raise ValidationError(f"label {i} is negative: {value}")
        labels.append(value)
    return labels


def check_labels(labels: list[int], artifact: MatrixArtifact) -> None:
    """Validate a label vector against its paired matrix."""
    if len(labels) != artifact.rows:
        raise ValidationError(
            f"label count {len(labels)} does not match matrix rows {artifact.rows}")
    bad = [l for l in labels if l >= artifact.cols]
    if bad:
        raise ValidationError(f"label {bad[0]} out of range for {artifact.cols} classes")


def inspect_path(path: str, kind: str | None = None) -> tuple[bool, str]:
    """Validate one artifact path; returns (passed, human-readable message)."""
    try:
        if path.endswith(".jsonl"):
            actual_kind = kind or sniff_record_kind(path)
            n = sum(1 for _ in load_records(path, actual_kind))
            return True, f"{actual_kind} records, {n} record(s)"
        art = load_matrix(path)
        return True, f"{art.role} matrix, {art.rows}x{art.cols}"
    except (FormatError, ValidationError, IoError) as exc:
        return False, str(exc)
