"""Temperature scaling of classifier logits and calibration diagnostics.

A single positive scalar T rescales every logit vector before the softmax,
``p* = softmax(z / T)``; T is fitted by minimizing the mean negative
log-likelihood on held-out (logits, label) pairs. Calibration quality is
quantified by the expected calibration error (ECE) over equal-width
confidence bins and visualized as a reliability diagram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .artifacts import MatrixArtifact, check_labels
from .errors import DegenerateError, DomainError, ValidationError

# Reference temperature for the CUB-fine-tuned Inception-v3 bird classifier.
# Reproducing it requires those classifier weights, so it is shipped as a
# documented constant, not a test target.
CUB_INCEPTION_TEMPERATURE = 0.598

DEFAULT_T_MIN = 0.05
DEFAULT_T_MAX = 20.0
DEFAULT_TOL = 1e-4
DEFAULT_BINS = 10


@dataclass(frozen=True)
class Temperature:
    """Positive scaling factor applied to logits before the softmax."""

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value <= 0:
            raise DomainError(f"temperature must be a finite positive real, got {self.value!r}")


@dataclass(frozen=True)
class ReliabilityReport:
    """Per-bin confidence/accuracy statistics plus the scalar ECE."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    mean_confidence: tuple[float, ...]
    accuracy: tuple[float, ...]
    ece: float

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def n_samples(self) -> int:
        return sum(self.counts)

    def to_dict(self) -> dict:
        return {
            "bin_edges": list(self.bin_edges),
            "bins": [
                {"count": c, "mean_confidence": mc, "accuracy": acc}
                for c, mc, acc in zip(self.counts, self.mean_confidence, self.accuracy)
            ],
            "ece": self.ece,
        }


def softmax_with_temperature(logits, temperature: Temperature | float = 1.0) -> np.ndarray:
    """Row-wise stable softmax of ``logits / T``.

    Accepts a single logit vector or a 2-D matrix of row vectors; the
    output rows are nonnegative and sum to 1 within 1e-12.
    """
    t = temperature.value if isinstance(temperature, Temperature) else Temperature(temperature).value
    z = np.asarray(logits, dtype=np.float64)
    if z.shape[-1] < 2:
        raise ValidationError(f"need at least 2 classes, got {z.shape[-1]}")
    if not np.isfinite(z).all():
        raise DomainError("logits contain non-finite entries")
    z = np.atleast_2d(z) / t
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    return p[0] if np.asarray(logits).ndim == 1 else p


def _logits_and_labels(logits: MatrixArtifact, labels) -> tuple[np.ndarray, np.ndarray]:
    if logits.role != "logits":
        raise ValidationError(f"expected a logits matrix, got role {logits.role!r}")
    labels = np.asarray(labels, dtype=np.int64)
    check_labels(labels.tolist(), logits)
    return logits.values(), labels


def nll(logits: MatrixArtifact, labels, temperature: Temperature | float = 1.0) -> float:
    """Mean negative log-likelihood of the labels under softmax(z / T).

    Computed through log-sum-exp; the mean uses an exactly rounded sum so
    the result does not depend on sample order.
    """
    t = temperature.value if isinstance(temperature, Temperature) else Temperature(temperature).value
    z, y = _logits_and_labels(logits, labels)
    z = z / t
    m = z.max(axis=1)
    lse = m + np.log(np.exp(z - m[:, None]).sum(axis=1))
    per_sample = lse - z[np.arange(len(y)), y]
    return math.fsum(per_sample) / len(per_sample)


def _is_degenerate(z: np.ndarray, y: np.ndarray) -> bool:
    return bool((y == y[0]).all() and (z == z[0]).all())


def fit_temperature(logits: MatrixArtifact, labels, *,
                    t_min: float = DEFAULT_T_MIN,
                    t_max: float = DEFAULT_T_MAX,
                    tol: float = DEFAULT_TOL) -> Temperature:
    """Fit T by golden-section search of the NLL over log T in [t_min, t_max].

    The NLL is convex in 1/T, hence unimodal along log T, so the search
    converges to the global minimum of the bracket. When 1.0 lies inside
    the bracket the result is explicitly guaranteed to be no worse than
    the unscaled NLL.
    """
    if not (math.isfinite(t_min) and math.isfinite(t_max) and 0 < t_min < t_max):
        raise DomainError(f"invalid search interval [{t_min}, {t_max}]")
    z, y = _logits_and_labels(logits, labels)
    if logits.rows < 2:
        raise ValidationError("need at least 2 samples to fit a temperature")
    if _is_degenerate(z, y):
        raise DegenerateError("all logit rows and labels are identical; NLL has no interior minimum")

    def objective(u: float) -> float:
        return nll(logits, labels, Temperature(math.exp(u)))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(t_min), math.log(t_max)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    while math.exp(b) - math.exp(a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
    best = math.exp((a + b) / 2.0)

    if t_min <= 1.0 <= t_max and nll(logits, labels, Temperature(1.0)) < objective(math.log(best)):
        best = 1.0
    return Temperature(best)


def reliability(probs: MatrixArtifact | np.ndarray, labels,
                n_bins: int = DEFAULT_BINS) -> ReliabilityReport:
    """Bin predictions by confidence over (0, 1] and compute the ECE.

    Bins are right-closed and equal width; a sample with confidence c lands
    in bin ceil(c * n_bins), with confidence 0 assigned to bin 1. Argmax
    ties resolve to the lowest class index. The ECE is the count-weighted
    mean absolute gap between bin accuracy and bin confidence over
    non-empty bins.

    ``probs`` is a probabilities artifact or an in-memory float64 row
    matrix (for probabilities that never passed through float32 storage).
    """
    if n_bins < 1:
        raise ValidationError(f"n_bins must be >= 1, got {n_bins}")
    if isinstance(probs, MatrixArtifact):
        if probs.role != "probabilities":
            raise ValidationError(f"expected a probabilities matrix, got role {probs.role!r}")
        p = probs.values()
    else:
        p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
        if not np.isfinite(p).all() or (p < 0).any():
            raise ValidationError("probability matrix must be finite and nonnegative")
    y = np.asarray(labels, dtype=np.int64)
    if len(y) != p.shape[0]:
        raise ValidationError(f"label count {len(y)} does not match matrix rows {p.shape[0]}")
    if len(y) and (y.max() >= p.shape[1] or y.min() < 0):
        raise ValidationError(f"labels out of range for {p.shape[1]} classes")
    confidence = p.max(axis=1)
    prediction = p.argmax(axis=1)
    correct = prediction == y

    idx = np.ceil(confidence * n_bins).astype(np.int64)
    np.clip(idx, 1, n_bins, out=idx)

    counts, mean_conf, accuracy = [], [], []
    for b in range(1, n_bins + 1):
        mask = idx == b
        n = int(mask.sum())
        counts.append(n)
        if n == 0:
            mean_conf.append(0.0)
            accuracy.append(0.0)
        else:
            mean_conf.append(math.fsum(confidence[mask]) / n)
            accuracy.append(int(correct[mask].sum()) / n)

    total = len(y)
    ece = math.fsum(
        c / total * abs(acc - mc)
        for c, mc, acc in zip(counts, mean_conf, accuracy) if c > 0
    )
    edges = tuple(i / n_bins for i in range(n_bins + 1))
    return ReliabilityReport(bin_edges=edges, counts=tuple(counts),
                             mean_confidence=tuple(mean_conf),
                             accuracy=tuple(accuracy), ece=ece)


def calibrate(logits: MatrixArtifact, labels, *,
              t_min: float = DEFAULT_T_MIN, t_max: float = DEFAULT_T_MAX,
              tol: float = DEFAULT_TOL, n_bins: int = DEFAULT_BINS,
              split_id: str | None = None) -> dict:
    """Fit a temperature and report before/after NLL, ECE, and reliability bins.

    ``split_id`` is free-form provenance recorded verbatim in the report;
    the engine never guesses which validation split produced the inputs.
    """
    fitted = fit_temperature(logits, labels, t_min=t_min, t_max=t_max, tol=tol)
    rel_before = reliability(softmax_with_temperature(logits.values(), 1.0), labels, n_bins=n_bins)
    rel_after = reliability(softmax_with_temperature(logits.values(), fitted), labels, n_bins=n_bins)
    return {
        "temperature": fitted.value,
        "nll_before": nll(logits, labels, 1.0),
        "nll_after": nll(logits, labels, fitted),
        "ece_before": rel_before.ece,
        "ece_after": rel_after.ece,
        "reliability_bins": {
            "before": rel_before.to_dict(),
            "after": rel_after.to_dict(),
        },
        "config": {
            "t_min": t_min,
            "t_max": t_max,
            "tol": tol,
            "n_bins": n_bins,
            "split_id": split_id,
        },
    }
