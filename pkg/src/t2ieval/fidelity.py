"""Distributional image-quality metrics.

The inception score is the exponential of the mean KL divergence between
per-image class distributions and their marginal; its calibrated variant
first rescales logits by a fitted temperature. The Fréchet distance
compares Gaussians fitted to feature sets. Object-centric variants run the
same math on matrices whose rows are detector crops instead of whole
images; the object-centric character lives entirely in the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .artifacts import MatrixArtifact
from .calibration import Temperature, softmax_with_temperature
from .errors import NumericalError, ValidationError

# Conditional probabilities below this are treated as exact zeros in KL terms.
KL_EPS = 1e-12

DEFAULT_SPLITS = 10

# Negative Fréchet values within this tolerance clamp to 0; anything more
# negative indicates a numerically broken covariance pair.
FID_NEG_TOL = 1e-6


@dataclass(frozen=True)
class SplitScore:
    """Mean/std of a score over contiguous input splits."""

    mean: float
    std: float
    n_splits: int


@dataclass(frozen=True)
class GaussianStats:
    """Fitted mean vector and covariance matrix of a feature set."""

    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        d = mu.shape[0]
        if d < 1:
            raise ValidationError("Gaussian dimension must be >= 1")
        if self.n < 2:
            raise ValidationError(f"need at least 2 samples, got {self.n}")
        if sigma.shape != (d, d):
            raise ValidationError(f"covariance shape {sigma.shape} does not match dimension {d}")
        if not (np.isfinite(mu).all() and np.isfinite(sigma).all()):
            raise ValidationError("Gaussian parameters contain non-finite entries")
        if np.abs(sigma - sigma.T).max() > 1e-9:
            raise ValidationError("covariance is not symmetric within 1e-9")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def _column_means(block: np.ndarray) -> np.ndarray:
    # Exactly rounded per-column sums keep the result independent of row order.
    return np.array([math.fsum(block[:, j]) for j in range(block.shape[1])]) / block.shape[0]


def _exp_mean_kl(block: np.ndarray) -> float:
    """exp(mean_rows KL(row || column mean)) with 0*log(0/q) = 0."""
    if (block == block[0]).all():
        # The mean of identical rows is the row itself; taking it verbatim
        # keeps every KL(p || p) term at exactly zero.
        return 1.0
    marginal = _column_means(block)
    log_m = np.log(np.where(marginal > 0, marginal, 1.0))
    mask = block >= KL_EPS
    log_p = np.log(np.where(mask, block, 1.0))
    terms = np.where(mask, block * (log_p - log_m), 0.0)
    row_kl = terms.sum(axis=1)
    return math.exp(math.fsum(row_kl) / block.shape[0])


def inception_score(probs: MatrixArtifact, n_splits: int = DEFAULT_SPLITS) -> SplitScore:
    """Inception score over contiguous splits of the rows, in input order.

    Per split the class marginal is the row mean; the split score is
    exp(mean KL(conditional || marginal)). ``n_splits=1`` evaluates the
    pure definition on the whole matrix. The score lies in [1, K].
    """
    if probs.role != "probabilities":
        raise ValidationError(f"expected a probabilities matrix, got role {probs.role!r}")
    if not 1 <= n_splits <= probs.rows:
        raise ValidationError(
            f"n_splits must be in [1, rows]; got {n_splits} for {probs.rows} rows")
    p = probs.values()
    n = probs.rows
    scores = [
        _exp_mean_kl(p[i * n // n_splits:(i + 1) * n // n_splits])
        for i in range(n_splits)
    ]
    mean = math.fsum(scores) / n_splits
    std = math.sqrt(math.fsum((s - mean) ** 2 for s in scores) / n_splits)
    return SplitScore(mean=mean, std=std, n_splits=n_splits)


def is_star(logits: MatrixArtifact, temperature: Temperature | float,
            n_splits: int = DEFAULT_SPLITS) -> SplitScore:
    """Inception score on temperature-calibrated probabilities.

    Probabilities are materialized at interchange precision (float32), so
    ``is_star(z, T=1)`` is bit-for-bit identical to ``inception_score`` on
    a stored softmax matrix.
    """
    if logits.role != "logits":
        raise ValidationError(f"expected a logits matrix, got role {logits.role!r}")
    probs = MatrixArtifact.from_array(
        softmax_with_temperature(logits.values(), temperature),
        role="probabilities", source_id=logits.source_id)
    return inception_score(probs, n_splits)


def fit_gaussian(features: MatrixArtifact) -> GaussianStats:
    """Fit mean and unbiased (n-1) covariance to the feature rows."""
    if features.role != "features":
        raise ValidationError(f"expected a features matrix, got role {features.role!r}")
    if features.rows < 2:
        raise ValidationError(f"need at least 2 feature rows, got {features.rows}")
    x = features.values()
    mu = _column_means(x)
    centered = x - mu
    sigma = centered.T @ centered / (features.rows - 1)
    sigma = (sigma + sigma.T) / 2.0
    return GaussianStats(mu=mu, sigma=sigma, n=features.rows)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(matrix)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Fréchet distance ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The cross term uses the symmetric form (S_a^(1/2) S_b S_a^(1/2))^(1/2)
    via eigendecomposition with negative eigenvalues clamped to zero, which
    avoids the numerically fragile square root of the non-symmetric
    product. Values within 1e-6 below zero clamp to 0.
    """
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    try:
        sqrt_a = _psd_sqrt(a.sigma)
        inner = sqrt_a @ b.sigma @ sqrt_a
        inner = (inner + inner.T) / 2.0
        eigs = np.linalg.eigvalsh(inner)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    trace_sqrt = float(np.sqrt(np.clip(eigs, 0.0, None)).sum())
    diff = a.mu - b.mu
    value = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * trace_sqrt)
    if value < -FID_NEG_TOL:
        raise NumericalError(f"Fréchet distance {value} is negative beyond tolerance")
    return 0.0 if value < 0 else value


def fid(real_features: MatrixArtifact, gen_features: MatrixArtifact) -> float:
    """Fréchet distance between Gaussians fitted to two feature sets."""
    return frechet_distance(fit_gaussian(real_features), fit_gaussian(gen_features))


def o_is(crop_probs: MatrixArtifact, n_splits: int = DEFAULT_SPLITS) -> SplitScore:
    """Inception score over detected-object crops (one row per crop)."""
    return inception_score(crop_probs, n_splits)


def o_fid(real_crop_features: MatrixArtifact, gen_crop_features: MatrixArtifact) -> float:
    """Fréchet distance between real and generated object-crop features."""
    return fid(real_crop_features, gen_crop_features)
