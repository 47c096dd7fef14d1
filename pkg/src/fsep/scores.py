"""Feature-separability scores over embeddings and class assignments.

The dispersion score is the log of the between-class scatter: the sum,
over predicted classes, of the squared distance from each class
centroid to the global feature mean, count-weighted (or not), divided
by ``k - 1``. The compactness score is the negative log of the average
within-class scatter. Both operate on any label source: argmax pseudo
labels, ground-truth labels, or cluster assignments.

All accumulation happens in float64. Rows are first brought into a
canonical (lexicographic) order so that permuting the input rows leaves
every score bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, DimensionMismatch, EmptyInput, InvalidK, LabelOutOfRange

DEGENERACY_EPS = 1e-12


@dataclass(frozen=True)
class ClassCentroids:
    """Per-class mean vectors, class sizes, and the global feature mean."""

    centroids: np.ndarray  # (k, d) float64, all-zero rows for empty classes
    counts: np.ndarray  # (k,) int64
    global_mean: np.ndarray  # (d,) float64


@dataclass(frozen=True)
class ScoreResult:
    """A named scalar score with a degeneracy flag and optional class counts."""

    kind: str
    value: float
    degenerate: bool = False
    counts: np.ndarray | None = None


def pseudo_labels(logits: np.ndarray) -> np.ndarray:
    """Argmax class index per row; ties resolve to the lowest index."""
    logits = np.asarray(logits)
    if logits.size == 0 or logits.shape[0] == 0:
        raise EmptyInput("pseudo_labels: no rows")
    return np.argmax(logits, axis=1).astype(np.int64)


def _checked_labels(labels: np.ndarray, m: int, k: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.shape[0] != m:
        raise DimensionMismatch(f"labels length {labels.shape} != row count {m}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise LabelOutOfRange(f"labels must lie in [0, {k})")
    return labels


def _canonical_order(features: np.ndarray) -> np.ndarray:
    # Lexicographic row order, first column as primary key. Restores a
    # fixed accumulation order regardless of input row permutation.
    return np.lexsort(features.T[::-1])


def class_centroids(features: np.ndarray, labels: np.ndarray, k: int) -> ClassCentroids:
    """Group rows by label and average them; empty classes get zero rows.

    The global mean is the plain mean of all rows. Sums run in float64
    over canonically ordered rows for cross-run determinism.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise EmptyInput("class_centroids: need at least one feature row")
    m = feats.shape[0]
    labels = _checked_labels(labels, m, k)

    order = _canonical_order(feats)
    sorted_feats = feats[order]
    sorted_labels = labels[order]

    counts = np.bincount(labels, minlength=k).astype(np.int64)
    centroids = np.zeros((k, feats.shape[1]), dtype=np.float64)
    for j in range(k):
        if counts[j]:
            centroids[j] = sorted_feats[sorted_labels == j].sum(axis=0) / counts[j]
    global_mean = sorted_feats.sum(axis=0) / m
    return ClassCentroids(centroids=centroids, counts=counts, global_mean=global_mean)


def dispersion_score(
    features: np.ndarray,
    labels: np.ndarray,
    k: int,
    weighted: bool = True,
) -> ScoreResult:
    """Between-class scatter score, log-transformed.

    weighted:   log( sum_j count_j * ||mean - centroid_j||^2 / (k - 1) )
    unweighted: log( sum over nonempty j of ||mean - centroid_j||^2 / (k - 1) )

    Empty classes contribute nothing. If the log argument falls below
    1e-12 it is clamped there and the result is flagged degenerate.
    """
    if k < 2:
        raise InvalidK(f"dispersion_score: k must be >= 2, got {k}")
    cc = class_centroids(features, labels, k)
    diffs = cc.global_mean[np.newaxis, :] - cc.centroids
    sq = np.einsum("jd,jd->j", diffs, diffs)
    if weighted:
        inner = float((cc.counts.astype(np.float64) * sq).sum())
    else:
        inner = float(sq[cc.counts > 0].sum())
    arg = inner / (k - 1)
    degenerate = arg < DEGENERACY_EPS
    value = math.log(max(arg, DEGENERACY_EPS))
    kind = "dispersion" if weighted else "dispersion-unweighted"
    return ScoreResult(kind=kind, value=value, degenerate=degenerate, counts=cc.counts)


def compactness_score(features: np.ndarray, labels: np.ndarray, k: int) -> ScoreResult:
    """Within-class scatter score: -log( sum_j sum_{i in j} ||z_i - centroid_j||^2 / (m - k) ).

    Requires m > k so the denominator stays positive. The log argument
    is clamped at 1e-12 with the degenerate flag set, mirroring
    dispersion_score.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise EmptyInput("compactness_score: need at least one feature row")
    m = feats.shape[0]
    if m <= k:
        raise DegenerateDenominator(f"compactness_score: need m > k, got m={m}, k={k}")
    labels = _checked_labels(labels, m, k)

    order = _canonical_order(feats)
    sorted_feats = feats[order]
    sorted_labels = labels[order]
    counts = np.bincount(labels, minlength=k).astype(np.int64)

    within = 0.0
    for j in range(k):
        if counts[j]:
            rows = sorted_feats[sorted_labels == j]
            centroid = rows.sum(axis=0) / counts[j]
            within += float(((rows - centroid) ** 2).sum())
    arg = within / (m - k)
    degenerate = arg < DEGENERACY_EPS
    value = -math.log(max(arg, DEGENERACY_EPS))
    return ScoreResult(kind="compactness", value=value, degenerate=degenerate, counts=counts)
