"""Extraction jobs: run a model over a manifest and write artifact files.

Row i of every emitted matrix corresponds to manifest entry i, and record
files keep manifest order. All outputs must pass `t2ieval validate`.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .formats import write_matrix, write_records
from .manifests import ManifestError
from .models import DetectionCounter, ModelError


def _batched(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start:start + size]


def _image_features(model, paths: list[str]) -> np.ndarray:
    if hasattr(model, "encode_images"):
        return model.encode_images(paths)
    return model.features_batch(paths)


def extract_logits(entries: list[dict], classifier, out_dir: str, *,
                   batch_size: int = 16, source_id: str = "",
                   with_probabilities: bool = True) -> list[str]:
    """Write ``logits`` (and a softmax ``probs`` twin) for the manifest images."""
    paths = [e["image"] for e in entries]
    blocks = [classifier.logits_batch(batch) for batch in _batched(paths, batch_size)]
    logits = np.concatenate(blocks, axis=0)
    written = [write_matrix(os.path.join(out_dir, "logits"), logits, "logits", source_id)]
    if with_probabilities:
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        probs = e / e.sum(axis=1, keepdims=True)
        written.append(write_matrix(os.path.join(out_dir, "probs"), probs,
                                    "probabilities", source_id))
    return written


def extract_features(entries: list[dict], extractor, out_dir: str, *,
                     batch_size: int = 16, source_id: str = "",
                     name: str = "features") -> str:
    """Write a feature matrix for the manifest images (whole images or crops)."""
    paths = [e["image"] for e in entries]
    blocks = [_image_features(extractor, batch) for batch in _batched(paths, batch_size)]
    return write_matrix(os.path.join(out_dir, name), np.concatenate(blocks, axis=0),
                        "features", source_id)


def detect_and_crop(entries: list[dict], detector, out_dir: str, *,
                    crop_threshold: float = 0.5, save_crops: bool = True) -> dict:
    """Write detection records and crop detector boxes above the threshold.

    Every manifest entry must carry ``expected_class`` (the caption-derived
    class the record is grouped under). Crops land in ``<out>/crops/`` with
    a crop manifest so they can be fed back through the feature and
    classifier jobs.
    """
    records = []
    crop_entries = []
    crops_dir = os.path.join(out_dir, "crops")
    for entry in entries:
        expected = str(entry.get("expected_class", ""))
        if not expected:
            raise ManifestError(
                f"entry {entry['id']!r}: detection jobs need expected_class in the manifest")
        detections = detector.detect(entry["image"])
        records.append({
            "image_id": entry["id"],
            "expected_class": expected,
            "detections": [{"class": d["class"], "score": d["score"]} for d in detections],
        })
        if not save_crops:
            continue
        keep = [d for d in detections if d["score"] >= crop_threshold and "box" in d]
        if keep:
            os.makedirs(crops_dir, exist_ok=True)
        with Image.open(entry["image"]) as img:
            rgb = img.convert("RGB")
            for k, det in enumerate(keep):
                x0, y0, x1, y1 = (int(round(v)) for v in det["box"])
                x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
                crop_path = os.path.join(crops_dir, f"{entry['id']}_{k}.png")
                rgb.crop((x0, y0, x1, y1)).save(crop_path)
                crop_entries.append({"id": f"{entry['id']}_{k}", "image": crop_path,
                                     "source_image": entry["id"], "class": det["class"],
                                     "score": det["score"]})
    paths = {"detections": write_records(os.path.join(out_dir, "detections.jsonl"), records)}
    if save_crops:
        paths["crops_manifest"] = write_records(
            os.path.join(out_dir, "crops_manifest.jsonl"), crop_entries)
        paths["n_crops"] = len(crop_entries)
    return paths


def score_retrieval(entries: list[dict], pair, out_dir: str) -> str:
    """Write retrieval records: one query scored against its caption set."""
    records = []
    for entry in entries:
        if entry.get("query_image"):
            query = pair.encode_images([entry["query_image"]])[0]
        else:
            query = pair.encode_texts([entry["query_text"]])[0]
        candidates = pair.encode_texts(entry["captions"])
        sims = candidates @ query
        records.append({"query_id": entry["id"], "gt_index": entry["gt_index"],
                        "similarities": [float(s) for s in sims]})
    return write_records(os.path.join(out_dir, "retrieval.jsonl"), records)


def score_triplets(entries: list[dict], pair, out_dir: str) -> str:
    """Write positional triplets: image vs matched and mismatched captions."""
    records = []
    for entry in entries:
        image = pair.encode_images([entry["query_image"]])[0]
        matched, mismatched = pair.encode_texts([entry["matched"], entry["mismatched"]])
        records.append({"word": entry["word"], "triplet_id": entry["id"],
                        "sim_matched": float(matched @ image),
                        "sim_mismatched": float(mismatched @ image)})
    return write_records(os.path.join(out_dir, "triplets.jsonl"), records)


def count_objects(entries: list[dict], detector, out_dir: str, *,
                  threshold: float = 0.5) -> str:
    """Write count records: detector-derived per-class counts, unrounded.

    Manifest entries must carry non-empty ``gt_counts`` (the human-annotated
    ground truth); predictions are detection counts at the threshold.
    """
    counter = DetectionCounter(detector, threshold=threshold)
    records = []
    for entry in entries:
        gt = entry.get("gt_counts")
        if not isinstance(gt, dict) or not gt:
            raise ManifestError(
                f"entry {entry['id']!r}: counter jobs need non-empty gt_counts in the manifest")
        records.append({"caption_id": entry["id"],
                        "gt_counts": {str(k): float(v) for k, v in gt.items()},
                        "pred_counts": counter.count(entry["image"])})
    return write_records(os.path.join(out_dir, "counts.jsonl"), records)
