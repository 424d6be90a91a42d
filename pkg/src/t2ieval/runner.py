"""Declarative benchmark runs over a config file.

A run computes every enabled metric for every method from artifact files,
then ranks the resulting table and emits reports. Failures isolate to
their (method, metric) cell: the cell is recorded as missing with a
diagnostic and the run exits nonzero. Identical configs and artifacts
always produce byte-identical outputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import alignment, calibration, fidelity
from .artifacts import load_labels, load_matrix, load_records
from .captions import WordSetConfig
from .errors import ConfigError, MetricsError
from .ranking import AspectSpec, MetricTable, load_rank_spec
from .reporting import rank_and_report

KNOWN_METRICS = ("is", "is_star", "fid", "rp", "soa", "pa", "ca", "o_is", "o_fid", "rank")

# Artifact keys each metric needs in a method's "artifacts" mapping.
REQUIRED_ARTIFACTS = {
    "is": ("probs",),
    "is_star": ("logits",),
    "fid": ("features",),
    "o_is": ("crop_probs",),
    "o_fid": ("crop_features",),
    "rp": ("retrieval",),
    "soa": ("detections",),
    "pa": ("triplets",),
    "ca": ("counts",),
}

# Table columns produced by each metric job, in canonical report order.
COLUMN_ORDER = ("IS", "IS_star", "FID", "RP", "SOA_C", "SOA_I", "O_IS", "O_FID", "CA", "PA")
METRIC_COLUMNS = {
    "is": ("IS",),
    "is_star": ("IS_star",),
    "fid": ("FID",),
    "rp": ("RP",),
    "soa": ("SOA_C", "SOA_I"),
    "pa": ("PA",),
    "ca": ("CA",),
    "o_is": ("O_IS",),
    "o_fid": ("O_FID",),
}

VALUES_JSON = "metric_values.json"


@dataclass(frozen=True)
class MethodConfig:
    name: str
    artifacts: dict[str, str]


@dataclass(frozen=True)
class RunConfig:
    output_dir: str
    metrics: tuple[str, ...]
    methods: tuple[MethodConfig, ...] = ()
    parameters: dict = field(default_factory=dict)
    real: dict[str, str] = field(default_factory=dict)
    metric_table: str | None = None
    rank_spec: str | None = None

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            if path.endswith(".toml"):
                with open(path, "rb") as fh:
                    raw = tomllib.load(fh)
            else:
                with open(path, "r", encoding="utf-8") as fh:
                    raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"config {path!r} does not parse: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON/TOML object")
        if not raw.get("output_dir"):
            raise ConfigError("config needs an output_dir")
        metrics = tuple(raw.get("metrics", ()))
        if not metrics:
            raise ConfigError("config enables no metrics")
        for metric in metrics:
            if metric not in KNOWN_METRICS:
                raise ConfigError(f"unknown metric {metric!r}, expected one of {KNOWN_METRICS}")
        methods = tuple(
            MethodConfig(name=str(entry.get("name", "")), artifacts=dict(entry.get("artifacts", {})))
            for entry in raw.get("methods", ())
        )
        config = cls(
            output_dir=str(raw["output_dir"]),
            metrics=metrics,
            methods=methods,
            parameters=dict(raw.get("parameters", {})),
            real=dict(raw.get("real", {})),
            metric_table=raw.get("metric_table"),
            rank_spec=raw.get("rank_spec"),
        )
        config.validate()
        return config

    def validate(self) -> None:
        if "rank" in self.metrics:
            if self.metrics != ("rank",):
                raise ConfigError("'rank' cannot be combined with computed metrics")
            if not self.metric_table:
                raise ConfigError("metric 'rank' needs a metric_table CSV path")
            return
        if not self.methods:
            raise ConfigError("config lists no methods")
        for method in self.methods:
            if not method.name:
                raise ConfigError("every method needs a name")
            for metric in self.metrics:
                for key in REQUIRED_ARTIFACTS[metric]:
                    if key not in method.artifacts:
                        raise ConfigError(
                            f"method {method.name!r}: metric {metric!r} needs artifact {key!r}")
        if "fid" in self.metrics and "features" not in self.real:
            raise ConfigError("metric 'fid' needs real.features")
        if "o_fid" in self.metrics and "crop_features" not in self.real:
            raise ConfigError("metric 'o_fid' needs real.crop_features")
        if "is_star" in self.metrics:
            has_fixed = "temperature" in self.parameters
            calib = self.parameters.get("calibration", {})
            has_calib = isinstance(calib, dict) and {"logits", "labels"} <= set(calib)
            if not (has_fixed or has_calib):
                raise ConfigError(
                    "metric 'is_star' needs parameters.temperature or parameters.calibration")
            if has_fixed:
                try:
                    value = float(self.parameters["temperature"])
                except (TypeError, ValueError):
                    raise ConfigError("parameters.temperature must be a number") from None
                if not (value > 0 and value == value and value != float("inf")):
                    raise ConfigError(f"parameters.temperature must be finite and positive, got {value}")


@dataclass
class RunResult:
    exit_code: int
    values: dict[str, dict[str, float]]
    details: dict[str, dict]
    errors: list[dict]
    report_paths: list[str]


def run(config: RunConfig) -> RunResult:
    """Execute a configured run; see the module docstring for semantics."""
    if config.metrics == ("rank",):
        return _run_rank_only(config)

    n_splits = int(config.parameters.get("n_splits", fidelity.DEFAULT_SPLITS))
    soa_threshold = float(config.parameters.get("soa_threshold", alignment.DEFAULT_SOA_THRESHOLD))
    word_config = (WordSetConfig.from_json(config.parameters["word_set"])
                   if config.parameters.get("word_set") else WordSetConfig())

    errors: list[dict] = []
    temperature = _resolve_temperature(config, errors)

    values: dict[str, dict[str, float]] = {}
    details: dict[str, dict] = {}
    for method in config.methods:
        values[method.name] = {}
        details[method.name] = {}
        for metric in config.metrics:
            if metric == "is_star" and temperature is None:
                continue  # already diagnosed by _resolve_temperature
            try:
                cols, extra = _compute_cell(metric, method, config, n_splits=n_splits,
                                            soa_threshold=soa_threshold,
                                            word_config=word_config,
                                            temperature=temperature)
            except MetricsError as exc:
                errors.append({"method": method.name, "metric": metric,
                               "category": type(exc).__name__,
                               "exit_code": exc.exit_code, "message": str(exc)})
                continue
            values[method.name].update(cols)
            details[method.name][metric] = extra

    columns = tuple(c for m in config.metrics for c in METRIC_COLUMNS[m])
    columns = tuple(c for c in COLUMN_ORDER if c in columns)
    manifest = {
        "metrics": list(config.metrics),
        "parameters": {
            "n_splits": n_splits,
            "soa_threshold": soa_threshold,
            "temperature": temperature.value if temperature is not None else None,
            "word_set_hash": word_config.content_hash(),
        },
    }

    os.makedirs(config.output_dir, exist_ok=True)
    report_paths = [_write_values(config, columns, values, details, errors, manifest)]

    if not errors:
        table = MetricTable(
            methods=tuple(m.name for m in config.methods),
            metrics=columns,
            values=values,
            directions={c: d for c, d in _all_directions().items() if c in columns},
        )
        spec, _ = load_rank_spec(config.rank_spec) if config.rank_spec else (_spec_for(columns), {})
        rank_and_report(table, spec, manifest, config.output_dir)
        report_paths.extend(_report_files(config.output_dir))
        return RunResult(0, values, details, errors, report_paths)

    exit_code = 3 if any(e["exit_code"] == 3 for e in errors) else 4
    return RunResult(exit_code, values, details, errors, report_paths)


def _run_rank_only(config: RunConfig) -> RunResult:
    spec, directions = (load_rank_spec(config.rank_spec)
                        if config.rank_spec else (AspectSpec(), {}))
    table = MetricTable.from_csv(config.metric_table, directions or None)
    manifest = {"metrics": ["rank"], "metric_table": os.path.basename(config.metric_table)}
    result = rank_and_report(table, spec, manifest, config.output_dir)
    values = {m: dict(table.values[m]) for m in table.methods}
    return RunResult(0, values, {"ranking_score": result["ranking_score"]}, [],
                     _report_files(config.output_dir))


def _report_files(out_dir: str) -> list[str]:
    from .reporting import REPORT_CSV, REPORT_HEATMAP_PNG, REPORT_JSON, REPORT_RS_PNG
    return [os.path.join(out_dir, name)
            for name in (REPORT_JSON, REPORT_CSV, REPORT_RS_PNG, REPORT_HEATMAP_PNG)]


def report_from_dir(run_dir: str, rank_spec: str | None = None) -> list[str]:
    """Re-render report files from a run directory's stored metric values."""
    path = os.path.join(run_dir, VALUES_JSON)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            stored = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path!r} does not parse: {exc}") from exc
    if stored.get("errors"):
        raise ConfigError(f"run in {run_dir!r} has failed cells; cannot rank an incomplete table")
    columns = tuple(stored["columns"])
    table = MetricTable(
        methods=tuple(stored["methods"]),
        metrics=columns,
        values={m: {c: float(v) for c, v in row.items()} for m, row in stored["values"].items()},
        directions={c: d for c, d in _all_directions().items() if c in columns},
    )
    spec, _ = load_rank_spec(rank_spec) if rank_spec else (_spec_for(columns), {})
    rank_and_report(table, spec, stored.get("manifest", {}), run_dir)
    return _report_files(run_dir)


def _resolve_temperature(config: RunConfig, errors: list[dict]):
    if "is_star" not in config.metrics:
        return None
    if "temperature" in config.parameters:
        return calibration.Temperature(float(config.parameters["temperature"]))
    calib = config.parameters["calibration"]
    try:
        logits = load_matrix(calib["logits"])
        labels = load_labels(calib["labels"])
        return calibration.fit_temperature(logits, labels)
    except MetricsError as exc:
        errors.append({"method": "*", "metric": "is_star",
                       "category": type(exc).__name__,
                       "exit_code": exc.exit_code,
                       "message": f"temperature calibration failed: {exc}"})
        return None


def _compute_cell(metric: str, method: MethodConfig, config: RunConfig, *,
                  n_splits: int, soa_threshold: float, word_config: WordSetConfig,
                  temperature) -> tuple[dict[str, float], dict]:
    art = method.artifacts
    if metric == "is":
        score = fidelity.inception_score(load_matrix(art["probs"]), n_splits)
        return {"IS": score.mean}, {"std": score.std, "n_splits": score.n_splits}
    if metric == "is_star":
        score = fidelity.is_star(load_matrix(art["logits"]), temperature, n_splits)
        return {"IS_star": score.mean}, {"std": score.std, "n_splits": score.n_splits,
                                         "temperature": temperature.value}
    if metric == "fid":
        value = fidelity.fid(load_matrix(config.real["features"]), load_matrix(art["features"]))
        return {"FID": value}, {}
    if metric == "o_is":
        score = fidelity.o_is(load_matrix(art["crop_probs"]), n_splits)
        return {"O_IS": score.mean}, {"std": score.std, "n_splits": score.n_splits}
    if metric == "o_fid":
        value = fidelity.o_fid(load_matrix(config.real["crop_features"]),
                               load_matrix(art["crop_features"]))
        return {"O_FID": value}, {}
    if metric == "rp":
        value = alignment.r_precision(load_records(art["retrieval"], "retrieval"))
        return {"RP": value}, {}
    if metric == "soa":
        result = alignment.soa(load_records(art["detections"], "detection"), soa_threshold)
        return ({"SOA_C": result.soa_c, "SOA_I": result.soa_i},
                {"threshold": soa_threshold, "per_class": result.to_dict()["per_class"]})
    if metric == "pa":
        result = alignment.positional_alignment(load_records(art["triplets"], "triplet"),
                                                word_config.words)
        return {"PA": result.pa}, result.to_dict()
    if metric == "ca":
        value = alignment.counting_alignment(load_records(art["counts"], "count"))
        return {"CA": value}, {}
    raise ConfigError(f"unknown metric {metric!r}")


def _all_directions() -> dict[str, str]:
    from .ranking import METRIC_DIRECTIONS
    return METRIC_DIRECTIONS


def _spec_for(columns: tuple[str, ...]) -> AspectSpec:
    """Default aspect spec restricted to the columns the run produced.

    Columns outside the default aspects (plain IS) are still ranked and
    reported but do not feed the combined ranking score. When no default
    aspect applies at all, every column becomes its own aspect.
    """
    aspects = []
    for name, metrics in AspectSpec().aspects:
        kept = tuple(m for m in metrics if m in columns)
        if kept:
            aspects.append((name, kept))
    if not aspects:
        aspects = [(c, (c,)) for c in columns]
    return AspectSpec(aspects=tuple(aspects))


def _write_values(config: RunConfig, columns, values, details, errors, manifest) -> str:
    payload = {
        "manifest": manifest,
        "columns": list(columns),
        "methods": [m.name for m in config.methods],
        "values": {m.name: {c: values[m.name].get(c) for c in columns}
                   for m in config.methods},
        "details": {m.name: details[m.name] for m in config.methods},
        "errors": errors,
    }
    path = os.path.join(config.output_dir, VALUES_JSON)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return path
