"""Command-line interface.

Subcommands mirror the metric operations one to one and print a JSON
object per invocation; `run` orchestrates a whole benchmark from a config
file. Exit codes: 0 success, 2 configuration problem, 3 artifact or input
validation failure, 4 numerical failure. Log verbosity is controlled by
the T2IEVAL_LOG environment variable (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys

import click

from . import __version__, alignment, calibration, fidelity, runner
from .artifacts import inspect_path, load_labels, load_matrix, load_records, write_jsonl
from .captions import (DEFAULT_NUMBER_LEXICON, WordSetConfig, build_pa_caption_sets,
                       filter_counting_captions, load_captions)
from .errors import MetricsError
from .ranking import MetricTable, load_rank_spec
from .reporting import rank_and_report

log = logging.getLogger("t2ieval")


def _setup_logging() -> None:
    level = os.environ.get("T2IEVAL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _emit(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2, ensure_ascii=False))


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MetricsError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="t2ieval")
def cli():
    """Evaluation metrics and ranking for text-to-image synthesis models."""
    _setup_logging()


@cli.command()
@click.argument("paths", nargs=-1, required=True)
@click.option("--kind", type=click.Choice(["detection", "retrieval", "triplet", "count"]),
              default=None, help="Force the record kind instead of sniffing it.")
def validate(paths, kind):
    """Validate artifact files; prints one PASS/FAIL line per path."""
    failed = 0
    for path in paths:
        ok, message = inspect_path(path, kind)
        click.echo(f"{'PASS' if ok else 'FAIL'} {path}: {message}")
        failed += 0 if ok else 1
    if failed:
        sys.exit(3)


@cli.command()
@click.option("--logits", "logits_path", required=True, type=click.Path())
@click.option("--labels", "labels_path", required=True, type=click.Path())
@click.option("--t-min", default=calibration.DEFAULT_T_MIN, show_default=True)
@click.option("--t-max", default=calibration.DEFAULT_T_MAX, show_default=True)
@click.option("--tol", default=calibration.DEFAULT_TOL, show_default=True)
@click.option("--bins", default=calibration.DEFAULT_BINS, show_default=True)
@click.option("--split-id", default=None, help="Provenance label for the validation split.")
@click.option("--figures", "figures_dir", default=None, type=click.Path(),
              help="Also render before/after reliability diagrams into this directory.")
@_handle_errors
def calibrate(logits_path, labels_path, t_min, t_max, tol, bins, split_id, figures_dir):
    """Fit a softmax temperature and report NLL/ECE before and after."""
    logits = load_matrix(logits_path)
    labels = load_labels(labels_path)
    report = calibration.calibrate(logits, labels, t_min=t_min, t_max=t_max,
                                   tol=tol, n_bins=bins, split_id=split_id)
    if figures_dir:
        from . import figures
        from .calibration import ReliabilityReport
        os.makedirs(figures_dir, exist_ok=True)
        for stage in ("before", "after"):
            bins_dict = report["reliability_bins"][stage]
            rel = ReliabilityReport(
                bin_edges=tuple(bins_dict["bin_edges"]),
                counts=tuple(b["count"] for b in bins_dict["bins"]),
                mean_confidence=tuple(b["mean_confidence"] for b in bins_dict["bins"]),
                accuracy=tuple(b["accuracy"] for b in bins_dict["bins"]),
                ece=bins_dict["ece"])
            figures.save_reliability_diagram(
                rel, os.path.join(figures_dir, f"reliability_{stage}.png"),
                title=f"Reliability ({stage})")
    _emit(report)


def _split_options(fn):
    fn = click.option("--splits", default=fidelity.DEFAULT_SPLITS, show_default=True,
                      help="Number of contiguous splits.")(fn)
    return fn


@cli.command(name="is")
@click.option("--probs", "probs_path", required=True, type=click.Path())
@_split_options
@_handle_errors
def is_cmd(probs_path, splits):
    """Inception score of a probabilities matrix."""
    art = load_matrix(probs_path)
    score = fidelity.inception_score(art, splits)
    _emit({"metric": "IS", "value": score.mean, "std": score.std, "n": art.rows,
           "config": {"n_splits": splits}})


@cli.command(name="is-star")
@click.option("--logits", "logits_path", required=True, type=click.Path())
@click.option("--temperature", type=float, default=None,
              help="Fixed temperature; mutually exclusive with --calibration-*.")
@click.option("--calibration-logits", type=click.Path(), default=None)
@click.option("--calibration-labels", type=click.Path(), default=None)
@_split_options
@_handle_errors
def is_star_cmd(logits_path, temperature, calibration_logits, calibration_labels, splits):
    """Calibrated inception score of a logits matrix."""
    if temperature is None and not (calibration_logits and calibration_labels):
        click.echo("error: provide --temperature or --calibration-logits/--calibration-labels",
                   err=True)
        sys.exit(2)
    if temperature is None:
        fitted = calibration.fit_temperature(load_matrix(calibration_logits),
                                             load_labels(calibration_labels))
    else:
        fitted = calibration.Temperature(temperature)
    art = load_matrix(logits_path)
    score = fidelity.is_star(art, fitted, splits)
    _emit({"metric": "IS_star", "value": score.mean, "std": score.std, "n": art.rows,
           "config": {"n_splits": splits, "temperature": fitted.value}})


@cli.command(name="fid")
@click.option("--real", "real_path", required=True, type=click.Path())
@click.option("--generated", "gen_path", required=True, type=click.Path())
@_handle_errors
def fid_cmd(real_path, gen_path):
    """Fréchet distance between two feature matrices."""
    real = load_matrix(real_path)
    gen = load_matrix(gen_path)
    value = fidelity.fid(real, gen)
    _emit({"metric": "FID", "value": value, "n": gen.rows,
           "config": {"real_rows": real.rows, "dim": real.cols}})


@cli.command(name="o-is")
@click.option("--crop-probs", "probs_path", required=True, type=click.Path())
@_split_options
@_handle_errors
def o_is_cmd(probs_path, splits):
    """Inception score over detected-object crops."""
    art = load_matrix(probs_path)
    score = fidelity.o_is(art, splits)
    _emit({"metric": "O_IS", "value": score.mean, "std": score.std, "n": art.rows,
           "config": {"n_splits": splits}})


@cli.command(name="o-fid")
@click.option("--real-crops", "real_path", required=True, type=click.Path())
@click.option("--generated-crops", "gen_path", required=True, type=click.Path())
@_handle_errors
def o_fid_cmd(real_path, gen_path):
    """Fréchet distance between real and generated object-crop features."""
    real = load_matrix(real_path)
    gen = load_matrix(gen_path)
    value = fidelity.o_fid(real, gen)
    _emit({"metric": "O_FID", "value": value, "n": gen.rows,
           "config": {"real_rows": real.rows, "dim": real.cols}})


@cli.command(name="rp")
@click.option("--records", "records_path", required=True, type=click.Path())
@_handle_errors
def rp_cmd(records_path):
    """Retrieval precision over similarity records (percentage)."""
    records = list(load_records(records_path, "retrieval"))
    value = alignment.r_precision(records)
    _emit({"metric": "RP", "value": value, "n": len(records),
           "config": {"tie_rule": "strict"}})


@cli.command(name="soa")
@click.option("--records", "records_path", required=True, type=click.Path())
@click.option("--threshold", default=alignment.DEFAULT_SOA_THRESHOLD, show_default=True)
@_handle_errors
def soa_cmd(records_path, threshold):
    """Semantic object accuracy (per class and per image)."""
    records = list(load_records(records_path, "detection"))
    result = alignment.soa(records, threshold)
    _emit({"metric": "SOA", "value": {"soa_c": result.soa_c, "soa_i": result.soa_i},
           "n": len(records),
           "per_class": result.to_dict()["per_class"],
           "config": {"score_threshold": threshold}})


@cli.command(name="pa")
@click.option("--triplets", "triplets_path", required=True, type=click.Path())
@click.option("--word-set", "word_set_path", default=None, type=click.Path())
@_handle_errors
def pa_cmd(triplets_path, word_set_path):
    """Positional alignment over matched/mismatched caption triplets."""
    config = WordSetConfig.from_json(word_set_path) if word_set_path else WordSetConfig()
    triplets = list(load_records(triplets_path, "triplet"))
    result = alignment.positional_alignment(triplets, config.words)
    if result.missing_words:
        log.warning("words with no triplets excluded from PA: %s",
                    ", ".join(result.missing_words))
    _emit({"metric": "PA", "value": result.pa, "n": len(triplets),
           "per_word": result.to_dict()["per_word"],
           "missing_words": list(result.missing_words),
           "config": {"word_set_hash": config.content_hash(), "tie_rule": "strict"}})


@cli.command(name="ca")
@click.option("--records", "records_path", required=True, type=click.Path())
@_handle_errors
def ca_cmd(records_path):
    """Counting alignment: mean per-caption count RMSE (lower is better)."""
    records = list(load_records(records_path, "count"))
    value = alignment.counting_alignment(records)
    _emit({"metric": "CA", "value": value, "n": len(records),
           "config": {"missing_prediction": 0.0}})


@cli.group()
def prep():
    """Caption preparation for the positional and counting metrics."""


@prep.command(name="pa-sets")
@click.option("--captions", "captions_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--word-set", "word_set_path", default=None, type=click.Path())
@_handle_errors
def prep_pa_sets(captions_path, out_dir, word_set_path):
    """Build matched/mismatched caption pairs per positional word."""
    config = WordSetConfig.from_json(word_set_path) if word_set_path else WordSetConfig()
    sets = build_pa_caption_sets(load_captions(captions_path), config)
    rows = [
        {"word": word, "caption_id": pair.caption_id,
         "matched": pair.matched, "mismatched": pair.mismatched}
        for word in config.words if word in sets.sets
        for pair in sets.sets[word]
    ]
    os.makedirs(out_dir, exist_ok=True)
    write_jsonl(os.path.join(out_dir, "pa_sets.jsonl"), rows)
    summary = {"counts": {w: sets.counts[w] for w in config.words if w in sets.counts},
               "unmapped": sets.unmapped,
               "word_set_hash": config.content_hash()}
    with open(os.path.join(out_dir, "pa_sets_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    for word, n in sets.unmapped.items():
        log.warning("word %r matched %d caption(s) but has no antonym; skipped", word, n)
    _emit(summary)


@prep.command(name="count-candidates")
@click.option("--captions", "captions_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--lexicon", "lexicon_path", default=None, type=click.Path(),
              help="JSON map of number words to values; defaults to a/an/one..ten and 1-10.")
@_handle_errors
def prep_count_candidates(captions_path, out_dir, lexicon_path):
    """Filter captions that mention countable quantities."""
    if lexicon_path:
        with open(lexicon_path, "r", encoding="utf-8") as fh:
            lexicon = {str(k): int(v) for k, v in json.load(fh).items()}
    else:
        lexicon = DEFAULT_NUMBER_LEXICON
    candidates = list(filter_counting_captions(load_captions(captions_path), lexicon))
    os.makedirs(out_dir, exist_ok=True)
    write_jsonl(os.path.join(out_dir, "count_candidates.jsonl"), candidates)
    _emit({"candidates": len(candidates), "out": os.path.join(out_dir, "count_candidates.jsonl")})


@cli.command(name="rank")
@click.option("--table", "table_path", required=True, type=click.Path())
@click.option("--spec", "spec_path", default=None, type=click.Path())
@click.option("--out", "out_dir", default="report", show_default=True, type=click.Path())
@_handle_errors
def rank_cmd(table_path, spec_path, out_dir):
    """Rank a metric table CSV and emit report files."""
    spec, directions = load_rank_spec(spec_path) if spec_path else (None, {})
    table = MetricTable.from_csv(table_path, directions or None)
    result = rank_and_report(table, spec, {"metric_table": os.path.basename(table_path)}, out_dir)
    _emit({"ranking_score": result["ranking_score"], "out": out_dir})


@cli.command(name="report")
@click.option("--run", "run_dir", required=True, type=click.Path())
@click.option("--spec", "spec_path", default=None, type=click.Path())
@_handle_errors
def report_cmd(run_dir, spec_path):
    """Re-render report files from a previous run directory."""
    paths = runner.report_from_dir(run_dir, spec_path)
    _emit({"written": paths})


@cli.command(name="run")
@click.option("--config", "config_path", required=True, type=click.Path())
@_handle_errors
def run_cmd(config_path):
    """Execute a full benchmark run from a JSON or TOML config."""
    config = runner.RunConfig.from_file(config_path)
    result = runner.run(config)
    _emit({"exit_code": result.exit_code,
           "errors": result.errors,
           "reports": result.report_paths})
    if result.exit_code != 0:
        sys.exit(result.exit_code)


def main():
    cli(prog_name="t2ieval")


if __name__ == "__main__":
    main()
