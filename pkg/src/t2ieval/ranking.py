"""Rank aggregation across methods and the combined ranking score.

Each metric column is converted to ranks in 1..N with the best method at
N, so a perfect reference row (for example real images) can attain the
maximum combined score. Ties receive the average of the covered rank
positions, which preserves rank sums. Aspect scores average the ranks of
a metric's variants, and the ranking score is the sum over aspects;
two-metric aspects therefore contribute each member with weight 1/2.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

from .errors import FormatError, ValidationError

HIGHER = "higher_better"
LOWER = "lower_better"

METRIC_DIRECTIONS = {
    "IS": HIGHER,
    "IS_star": HIGHER,
    "FID": LOWER,
    "RP": HIGHER,
    "SOA_C": HIGHER,
    "SOA_I": HIGHER,
    "O_IS": HIGHER,
    "O_FID": LOWER,
    "CA": LOWER,
    "PA": HIGHER,
}

DEFAULT_ASPECTS = (
    ("Image Realism", ("IS_star", "FID")),
    ("Object Fidelity", ("O_IS", "O_FID")),
    ("Object Accuracy", ("SOA_C", "SOA_I")),
    ("Text Relevance", ("RP",)),
    ("Positional Alignment", ("PA",)),
    ("Counting Alignment", ("CA",)),
)

TIE_RULE = "average"


@dataclass(frozen=True)
class MetricTable:
    """Methods x metrics values with a direction per metric column."""

    methods: tuple[str, ...]
    metrics: tuple[str, ...]
    values: dict[str, dict[str, float]]
    directions: dict[str, str]

    def __post_init__(self):
        if not self.methods:
            raise ValidationError("metric table has no methods")
        if len(set(self.methods)) != len(self.methods):
            raise ValidationError("duplicate method names in metric table")
        for metric in self.metrics:
            direction = self.directions.get(metric)
            if direction not in (HIGHER, LOWER):
                raise ValidationError(f"metric {metric!r} has no direction")
        for method in self.methods:
            row = self.values.get(method)
            if row is None:
                raise ValidationError(f"method {method!r} has no values")
            for metric in self.metrics:
                if metric not in row:
                    raise ValidationError(f"missing cell ({method!r}, {metric!r})")

    @classmethod
    def from_csv(cls, path: str, directions: dict[str, str] | None = None) -> "MetricTable":
        """Load ``method,<metric>,...`` CSV; directions default by metric name."""
        try:
            with open(path, "r", encoding="utf-8", newline="") as fh:
                reader = csv.reader(fh)
                rows = [row for row in reader if row and any(cell.strip() for cell in row)]
        except OSError as exc:
            raise FormatError(f"cannot read metric table {path!r}: {exc}") from exc
        if not rows:
            raise FormatError(f"metric table {path!r} is empty")
        header = [cell.strip() for cell in rows[0]]
        if not header or header[0] != "method":
            raise FormatError(f"metric table {path!r}: first column must be 'method'")
        metrics = tuple(header[1:])
        dir_map = {**METRIC_DIRECTIONS, **(directions or {})}
        methods = []
        values: dict[str, dict[str, float]] = {}
        for row in rows[1:]:
            if len(row) != len(header):
                raise FormatError(
                    f"metric table {path!r}: row {row[0]!r} has {len(row)} cells, expected {len(header)}")
            name = row[0].strip()
            methods.append(name)
            cells = {}
            for metric, cell in zip(metrics, row[1:]):
                try:
                    cells[metric] = float(cell)
                except ValueError:
                    raise ValidationError(
                        f"cell ({name!r}, {metric!r}) is not a number: {cell!r}") from None
            values[name] = cells
        return cls(methods=tuple(methods), metrics=metrics, values=values,
                   directions={m: dir_map[m] for m in metrics if m in dir_map})

    def column(self, metric: str) -> list[float]:
        return [self.values[m][metric] for m in self.methods]


@dataclass(frozen=True)
class AspectSpec:
    """Ordered aspects, each aggregating one or more metric columns."""

    aspects: tuple[tuple[str, tuple[str, ...]], ...] = DEFAULT_ASPECTS

    def __post_init__(self):
        names = [name for name, _ in self.aspects]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate aspect names")
        for name, metrics in self.aspects:
            if not metrics:
                raise ValidationError(f"aspect {name!r} has no metrics")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.aspects)


def load_rank_spec(path: str) -> tuple[AspectSpec, dict[str, str]]:
    """Load an aspect spec JSON: {"aspects": [{name, metrics}], "directions": {}}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read rank spec {path!r}: {exc}") from exc
    aspects = tuple(
        (entry["name"], tuple(entry["metrics"])) for entry in raw.get("aspects", [])
    ) or DEFAULT_ASPECTS
    return AspectSpec(aspects=aspects), dict(raw.get("directions", {}))


def rank_metric(values, direction: str) -> list[float]:
    """Rank one metric column: best value gets rank N, worst gets 1.

    Tied values receive the average of the rank positions they cover, so
    the column rank sum is always N(N+1)/2.
    """
    if direction not in (HIGHER, LOWER):
        raise ValidationError(f"unknown direction {direction!r}")
    vals = [float(v) for v in values]
    for v in vals:
        if not math.isfinite(v):
            raise ValidationError(f"cannot rank non-finite value {v!r}")
    key = vals if direction == HIGHER else [-v for v in vals]
    order = sorted(range(len(vals)), key=lambda i: key[i])
    ranks = [0.0] * len(vals)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and key[order[j + 1]] == key[order[i]]:
            j += 1
        average = (i + j + 2) / 2.0  # 1-based positions i+1 .. j+1
        for t in range(i, j + 1):
            ranks[order[t]] = average
        i = j + 1
    return ranks


def table_ranks(table: MetricTable) -> dict[str, dict[str, float]]:
    """Per-method rank of every metric column: method -> metric -> rank."""
    by_metric = {m: rank_metric(table.column(m), table.directions[m]) for m in table.metrics}
    return {
        method: {metric: by_metric[metric][i] for metric in table.metrics}
        for i, method in enumerate(table.methods)
    }


def aspect_scores(table: MetricTable, spec: AspectSpec | None = None,
                  ranks: dict[str, dict[str, float]] | None = None) -> dict[str, dict[str, float]]:
    """Mean member-metric rank per aspect: method -> aspect -> score."""
    spec = spec or AspectSpec()
    for _, metrics in spec.aspects:
        for metric in metrics:
            if metric not in table.metrics:
                raise ValidationError(f"aspect metric {metric!r} missing from table")
    ranks = ranks or table_ranks(table)
    return {
        method: {
            name: math.fsum(ranks[method][m] for m in metrics) / len(metrics)
            for name, metrics in spec.aspects
        }
        for method in table.methods
    }


def ranking_score(table: MetricTable, spec: AspectSpec | None = None) -> dict[str, float]:
    """Combined ranking score per method: the sum of its aspect scores."""
    spec = spec or AspectSpec()
    aspects = aspect_scores(table, spec)
    return {
        method: math.fsum(aspects[method][name] for name in spec.names)
        for method in table.methods
    }
