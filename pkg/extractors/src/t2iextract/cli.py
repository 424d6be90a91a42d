"""Command-line interface: one `extract` command per model kind.

    t2iextract extract --kind classifier   --manifest imgs.jsonl --out dir
    t2iextract extract --kind encoder      --manifest imgs.jsonl --out dir
    t2iextract extract --kind detector     --manifest imgs.jsonl --out dir
    t2iextract extract --kind encoder-pair --manifest pairs.jsonl --out dir --task retrieval
    t2iextract extract --kind counter      --manifest imgs.jsonl --out dir

Model selection: ``--model hash`` (deterministic, weight-free baseline),
``--model torchvision:<arch>`` with optional ``--weights``, ``--model
clip:<local path>``, ``--model maskrcnn`` for detection. Nothing is ever
downloaded; missing weights fail with a clear diagnostic.
"""

from __future__ import annotations

import json
import sys

import click

from . import jobs, manifests, models


@click.group()
def cli():
    """Produce t2ieval artifact files from images and captions."""


@cli.command()
@click.option("--kind", required=True,
              type=click.Choice(["classifier", "encoder", "encoder-pair", "detector", "counter"]))
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--model", "model_spec", default="hash", show_default=True)
@click.option("--weights", default=None, type=click.Path(),
              help="Local weights file for torchvision models.")
@click.option("--device", default="cpu", show_default=True)
@click.option("--batch-size", default=16, show_default=True)
@click.option("--threshold", default=0.5, show_default=True,
              help="Detector score threshold for crops and counting.")
@click.option("--task", type=click.Choice(["retrieval", "triplets"]), default="retrieval",
              show_default=True, help="Similarity task for --kind encoder-pair.")
@click.option("--classes", "n_classes", default=models.DEFAULT_CLASSES, show_default=True,
              help="Class count for the hash classifier.")
@click.option("--probabilities/--no-probabilities", default=True, show_default=True,
              help="Also write the softmax probabilities matrix for classifiers.")
@click.option("--feature-name", default="features", show_default=True,
              help="Output stem for --kind encoder.")
def extract(kind, manifest_path, out_dir, model_spec, weights, device, batch_size,
            threshold, task, n_classes, probabilities, feature_name):
    """Run one extraction job over a manifest."""
    try:
        result = _run(kind, manifest_path, out_dir, model_spec, weights, device,
                      batch_size, threshold, task, n_classes, probabilities, feature_name)
    except (manifests.ManifestError, models.ModelError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(result, indent=2))


def _run(kind, manifest_path, out_dir, model_spec, weights, device, batch_size,
         threshold, task, n_classes, probabilities, feature_name):
    source_id = f"t2iextract:{kind}:{model_spec}"
    if kind == "classifier":
        entries = manifests.load_image_manifest(manifest_path)
        model = models.make_classifier(model_spec, weights=weights, device=device,
                                       n_classes=n_classes)
        written = jobs.extract_logits(entries, model, out_dir, batch_size=batch_size,
                                      source_id=source_id,
                                      with_probabilities=probabilities)
        return {"kind": kind, "rows": len(entries), "written": written}
    if kind == "encoder":
        entries = manifests.load_image_manifest(manifest_path)
        model = models.make_feature_extractor(model_spec, weights=weights, device=device)
        stem = jobs.extract_features(entries, model, out_dir, batch_size=batch_size,
                                     source_id=source_id, name=feature_name)
        return {"kind": kind, "rows": len(entries), "written": [stem]}
    if kind == "detector":
        entries = manifests.load_image_manifest(manifest_path)
        detector = models.make_detector(model_spec, weights=weights, device=device)
        paths = jobs.detect_and_crop(entries, detector, out_dir, crop_threshold=threshold)
        return {"kind": kind, "rows": len(entries), **paths}
    if kind == "encoder-pair":
        pair = models.make_encoder_pair(model_spec, device=device)
        if task == "retrieval":
            entries = manifests.load_retrieval_manifest(manifest_path)
            path = jobs.score_retrieval(entries, pair, out_dir)
        else:
            entries = manifests.load_triplet_manifest(manifest_path)
            path = jobs.score_triplets(entries, pair, out_dir)
        return {"kind": kind, "task": task, "rows": len(entries), "written": [path]}
    if kind == "counter":
        entries = manifests.load_image_manifest(manifest_path)
        detector = models.make_detector(model_spec, weights=weights, device=device)
        path = jobs.count_objects(entries, detector, out_dir, threshold=threshold)
        return {"kind": kind, "rows": len(entries), "written": [path]}
    raise models.ModelError(f"unknown kind {kind!r}")


def main():
    cli(prog_name="t2iextract")


if __name__ == "__main__":
    main()
