"""Comparison estimators: confidence, entropy, ATC, Frechet, MMD.

Confidence and entropy summarize the softmax outputs on the test set
alone. ATC calibrates a confidence threshold on labeled in-distribution
data and counts test rows below it. The Frechet and MMD distances
compare feature distributions between a reference and a test set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EigenFailure,
    EmptyInput,
    InsufficientSamples,
    LabelOutOfRange,
    ZeroBandwidth,
)
from .scores import ScoreResult


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction for numerical stability."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def conf_score(logits: np.ndarray) -> ScoreResult:
    """Mean over rows of the maximum softmax probability."""
    logits = np.asarray(logits)
    if logits.shape[0] == 0:
        raise EmptyInput("conf_score: no rows")
    value = float(softmax(logits).max(axis=1).mean())
    return ScoreResult(kind="confscore", value=value)


def entropy_score(logits: np.ndarray) -> ScoreResult:
    """Mean over rows of the softmax entropy, with 0*log(0) = 0."""
    logits = np.asarray(logits)
    if logits.shape[0] == 0:
        raise EmptyInput("entropy_score: no rows")
    p = softmax(logits)
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    value = float(-plogp.sum(axis=1).mean())
    return ScoreResult(kind="entropy", value=value)


@dataclass(frozen=True)
class AtcThreshold:
    """Confidence threshold calibrated so that P(s <= t) matches the
    observed in-distribution error."""

    t: float
    calibration_error: float


def atc_calibrate(val_logits: np.ndarray, val_labels: np.ndarray) -> AtcThreshold:
    """Pick t as the q-th smallest validation confidence, q = round(err * n).

    With the predicate ``s <= t``, the rule reproduces the validation
    error on the calibration set itself (up to ties at t). q = 0 yields
    t = -inf, i.e. nothing is ever flagged.
    """
    logits = np.asarray(val_logits)
    n = logits.shape[0]
    if n == 0:
        raise EmptyInput("atc_calibrate: no rows")
    labels = np.asarray(val_labels, dtype=np.int64)
    if labels.shape[0] != n:
        raise DimensionMismatch(f"labels length {labels.shape[0]} != rows {n}")
    k = logits.shape[1]
    if labels.min() < 0 or labels.max() >= k:
        raise LabelOutOfRange(f"labels must lie in [0, {k})")
    probs = softmax(logits)
    conf = probs.max(axis=1)
    pred = probs.argmax(axis=1)
    err = float((pred != labels).mean())
    q = int(round(err * n))
    if q == 0:
        t = float("-inf")
    else:
        t = float(np.sort(conf)[q - 1])
    return AtcThreshold(t=t, calibration_error=err)


def atc_predict(test_logits: np.ndarray, th: AtcThreshold) -> float:
    """Fraction of test rows whose max softmax confidence is <= th.t."""
    logits = np.asarray(test_logits)
    if logits.shape[0] == 0:
        raise EmptyInput("atc_predict: no rows")
    conf = softmax(logits).max(axis=1)
    return float((conf <= th.t).mean())


@dataclass(frozen=True)
class GaussianSummary:
    """Mean vector and (shrinkage-regularized) covariance of a feature set."""

    mean: np.ndarray  # (d,)
    covariance: np.ndarray  # (d, d)

    @property
    def d(self) -> int:
        return int(self.mean.shape[0])

    def check(self, sym_tol: float = 1e-10, eig_floor: float = -1e-8) -> None:
        asym = float(np.abs(self.covariance - self.covariance.T).max())
        if asym > sym_tol:
            raise EigenFailure(f"covariance asymmetric by {asym}")
        w = np.linalg.eigvalsh((self.covariance + self.covariance.T) / 2.0)
        if w.min() < eig_floor:
            raise EigenFailure(f"covariance has eigenvalue {w.min()} below {eig_floor}")


def gaussian_summary(features: np.ndarray) -> GaussianSummary:
    """Column means and sample covariance (divisor m - 1) plus shrinkage.

    The shrinkage term lambda * I with lambda = 1e-6 * trace / d
    (lambda = 1e-6 when the trace is zero) keeps the covariance usable
    when m < d, which is common for small shifted test sets.
    """
    feats = np.asarray(features, dtype=np.float64)
    m = feats.shape[0]
    if m < 2:
        raise InsufficientSamples(f"gaussian_summary: need at least 2 rows, got {m}")
    d = feats.shape[1]
    mean = feats.mean(axis=0)
    centered = feats - mean
    cov = centered.T @ centered / (m - 1)
    trace = float(np.trace(cov))
    lam = 1e-6 * trace / d if trace > 0.0 else 1e-6
    cov = cov + lam * np.eye(d)
    return GaussianSummary(mean=mean, covariance=cov)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition, negatives clamped."""
    try:
        w, v = np.linalg.eigh((mat + mat.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigendecomposition failed: {exc}") from exc
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Squared Frechet distance between two Gaussian summaries.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_b^1/2 S_a S_b^1/2)^1/2),
    evaluated with symmetric eigendecompositions; negative eigenvalues
    and the final value are clamped at zero.
    """
    if a.d != b.d:
        raise DimensionMismatch(f"summaries have different dimensions: {a.d} vs {b.d}")
    mean_term = float(((a.mean - b.mean) ** 2).sum())
    sqrt_b = _psd_sqrt(b.covariance)
    inner = sqrt_b @ a.covariance @ sqrt_b
    try:
        w = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigendecomposition failed: {exc}") from exc
    trace_sqrt = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    value = mean_term + float(np.trace(a.covariance) + np.trace(b.covariance)) - 2.0 * trace_sqrt
    return max(value, 0.0)


def _pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a2 = np.einsum("id,id->i", a, a)
    b2 = np.einsum("id,id->i", b, b)
    d = a2[:, np.newaxis] + b2[np.newaxis, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)
    return d


def mmd_rbf(x: np.ndarray, y: np.ndarray, bandwidth: float | None = None) -> float:
    """Biased squared MMD with an RBF kernel exp(-||u - v||^2 / (2 sigma^2)).

    ``bandwidth`` is the kernel width sigma. When omitted, sigma^2 is
    set to half the median pairwise squared distance over the pooled
    samples (median heuristic). The biased V-statistic keeps identical
    inputs at exactly zero; the result is clamped at zero.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] == 0 or y.shape[0] == 0:
        raise EmptyInput("mmd_rbf: both sample sets must be non-empty matrices")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"sample dimensions differ: {x.shape[1]} vs {y.shape[1]}")

    dxx = _pairwise_sq_dists(x, x)
    dyy = _pairwise_sq_dists(y, y)
    dxy = _pairwise_sq_dists(x, y)

    if bandwidth is None:
        pooled = np.concatenate(
            [
                dxx[np.triu_indices_from(dxx, k=1)],
                dyy[np.triu_indices_from(dyy, k=1)],
                dxy.ravel(),
            ]
        )
        med = float(np.median(pooled))
        if med <= 0.0:
            raise ZeroBandwidth("median pairwise distance is zero; pass an explicit bandwidth")
        sigma2 = med / 2.0
    else:
        if not bandwidth > 0.0:
            raise ZeroBandwidth(f"bandwidth must be positive, got {bandwidth}")
        sigma2 = float(bandwidth) ** 2

    scale = -1.0 / (2.0 * sigma2)
    value = (
        float(np.exp(scale * dxx).mean())
        + float(np.exp(scale * dyy).mean())
        - 2.0 * float(np.exp(scale * dxy).mean())
    )
    return max(value, 0.0)
