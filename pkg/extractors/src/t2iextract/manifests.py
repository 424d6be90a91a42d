"""Manifest loading: line-delimited JSON job descriptions.

Image manifests list ``{"id", "image", ...}`` entries; similarity
manifests additionally carry caption material. Entries are validated with
line numbers and kept in file order, which fixes the row order of every
emitted artifact.
"""

from __future__ import annotations

import json
import os


class ManifestError(Exception):
    pass


def _iter_jsonl(path: str):
    if not os.path.exists(path):
        raise ManifestError(f"manifest {path!r} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"{path}:{line_no}: entry must be an object")
            yield line_no, obj


def _require(obj: dict, key: str, path: str, line: int):
    if key not in obj:
        raise ManifestError(f"{path}:{line}: missing key {key!r}")
    return obj[key]


def load_image_manifest(path: str, require_images: bool = True) -> list[dict]:
    """Entries {"id", "image"} plus optional extras (expected_class, gt_counts)."""
    entries = []
    for line_no, obj in _iter_jsonl(path):
        entry = {"id": str(_require(obj, "id", path, line_no)),
                 "image": str(_require(obj, "image", path, line_no))}
        if require_images and not os.path.exists(entry["image"]):
            raise ManifestError(f"{path}:{line_no}: image {entry['image']!r} does not exist")
        for extra in ("expected_class", "gt_counts"):
            if extra in obj:
                entry[extra] = obj[extra]
        entries.append(entry)
    if not entries:
        raise ManifestError(f"manifest {path!r} lists no entries")
    return entries


def load_retrieval_manifest(path: str) -> list[dict]:
    """Entries with a query (image path or text) and a candidate caption list.

    {"id", "query_image" | "query_text", "captions": [...], "gt_index": int}
    """
    entries = []
    for line_no, obj in _iter_jsonl(path):
        captions = _require(obj, "captions", path, line_no)
        gt_index = _require(obj, "gt_index", path, line_no)
        if not isinstance(captions, list) or len(captions) < 2:
            raise ManifestError(f"{path}:{line_no}: captions must list at least 2 entries")
        if not isinstance(gt_index, int) or not 0 <= gt_index < len(captions):
            raise ManifestError(f"{path}:{line_no}: gt_index {gt_index!r} out of range")
        if "query_image" not in obj and "query_text" not in obj:
            raise ManifestError(f"{path}:{line_no}: needs query_image or query_text")
        entries.append({"id": str(_require(obj, "id", path, line_no)),
                        "query_image": obj.get("query_image"),
                        "query_text": obj.get("query_text"),
                        "captions": [str(c) for c in captions],
                        "gt_index": gt_index})
    if not entries:
        raise ManifestError(f"manifest {path!r} lists no entries")
    return entries


def load_triplet_manifest(path: str) -> list[dict]:
    """Entries {"id", "word", "query_image", "matched", "mismatched"}."""
    entries = []
    for line_no, obj in _iter_jsonl(path):
        entries.append({
            "id": str(_require(obj, "id", path, line_no)),
            "word": str(_require(obj, "word", path, line_no)),
            "query_image": str(_require(obj, "query_image", path, line_no)),
            "matched": str(_require(obj, "matched", path, line_no)),
            "mismatched": str(_require(obj, "mismatched", path, line_no)),
        })
    if not entries:
        raise ManifestError(f"manifest {path!r} lists no entries")
    return entries
