"""Report emission: machine-readable JSON, tabular CSV, and figures.

Reports embed the full configuration that produced them, carry no
timestamps, and use deterministic ordering, so re-running on identical
inputs yields byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os

from .errors import IoError, ValidationError
from .ranking import TIE_RULE, AspectSpec, MetricTable, aspect_scores, ranking_score, table_ranks

REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"
REPORT_RS_PNG = "report_ranking.png"
REPORT_HEATMAP_PNG = "report_ranks.png"


def emit_report(table: MetricTable,
                ranks: dict[str, dict[str, float]],
                aspects: dict[str, dict[str, float]],
                rs: dict[str, float],
                run_manifest: dict,
                out_dir: str) -> list[str]:
    """Write report.json, report.csv, and figures into ``out_dir``.

    The CSV rounds the ranking score to one decimal; the JSON keeps full
    precision. Returns the written paths.
    """
    for name, mapping in (("ranks", ranks), ("aspect scores", aspects), ("ranking scores", rs)):
        if set(mapping) != set(table.methods):
            raise ValidationError(f"{name} cover a different method set than the table")
    aspect_names = list(next(iter(aspects.values())).keys()) if aspects else []

    payload = {
        "methods": list(table.methods),
        "metrics": list(table.metrics),
        "directions": {m: table.directions[m] for m in table.metrics},
        "tie_rule": TIE_RULE,
        "values": {m: {k: table.values[m][k] for k in table.metrics} for m in table.methods},
        "ranks": {m: {k: ranks[m][k] for k in table.metrics} for m in table.methods},
        "aspect_scores": {m: {a: aspects[m][a] for a in aspect_names} for m in table.methods},
        "ranking_score": {m: rs[m] for m in table.methods},
        "config": run_manifest,
    }

    try:
        os.makedirs(out_dir, exist_ok=True)
        json_path = os.path.join(out_dir, REPORT_JSON)
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, ensure_ascii=False)
            fh.write("\n")

        csv_path = os.path.join(out_dir, REPORT_CSV)
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["method"]
                + list(table.metrics)
                + [f"rank:{m}" for m in table.metrics]
                + aspect_names
                + ["RS"])
            for method in table.methods:
                writer.writerow(
                    [method]
                    + [_num(table.values[method][m]) for m in table.metrics]
                    + [_num(ranks[method][m]) for m in table.metrics]
                    + [_num(aspects[method][a]) for a in aspect_names]
                    + [f"{rs[method]:.1f}"])
    except OSError as exc:
        raise IoError(f"cannot write report into {out_dir!r}: {exc}") from exc

    from . import figures  # deferred: matplotlib is slow to import

    rs_png = os.path.join(out_dir, REPORT_RS_PNG)
    heat_png = os.path.join(out_dir, REPORT_HEATMAP_PNG)
    figures.save_ranking_bar(list(table.methods), rs, rs_png)
    figures.save_rank_heatmap(list(table.methods), list(table.metrics), ranks, heat_png)
    return [json_path, csv_path, rs_png, heat_png]


def rank_and_report(table: MetricTable, spec: AspectSpec | None,
                    run_manifest: dict, out_dir: str) -> dict:
    """Rank a complete table, emit all report files, return the JSON payload."""
    spec = spec or AspectSpec()
    ranks = table_ranks(table)
    aspects = aspect_scores(table, spec, ranks)
    rs = ranking_score(table, spec)
    manifest = dict(run_manifest)
    manifest.setdefault("aspects", [
        {"name": name, "metrics": list(metrics), "weight": 1.0 / len(metrics)}
        for name, metrics in spec.aspects
    ])
    emit_report(table, ranks, aspects, rs, manifest, out_dir)
    return {
        "ranks": ranks,
        "aspect_scores": aspects,
        "ranking_score": rs,
    }


def _num(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text
