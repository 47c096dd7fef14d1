"""Deterministic Lloyd's k-means with k-means++ seeding.

Powers the clustering variant of the dispersion score: instead of
argmax pseudo labels, points are grouped by a seeded k-means run and
the same between-class scatter is computed over the resulting
assignments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidK
from .scores import ScoreResult, dispersion_score

KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-8


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray  # (k, d)
    assignments: np.ndarray  # (m,) int64, nearest centroid (ties -> lowest index)
    inertia: float  # total within-cluster squared distance
    iterations: int


def _assign(feats: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-centroid assignment and the squared distance to it."""
    f2 = np.einsum("id,id->i", feats, feats)
    c2 = np.einsum("jd,jd->j", centroids, centroids)
    d2 = f2[:, np.newaxis] + c2[np.newaxis, :] - 2.0 * (feats @ centroids.T)
    np.maximum(d2, 0.0, out=d2)
    assign = np.argmin(d2, axis=1).astype(np.int64)
    return assign, d2[np.arange(feats.shape[0]), assign]


def _plusplus_init(feats: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted draws from the data points."""
    m = feats.shape[0]
    centroids = np.empty((k, feats.shape[1]), dtype=np.float64)
    centroids[0] = feats[int(rng.integers(m))]
    d2 = np.einsum("id,id->i", feats - centroids[0], feats - centroids[0])
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(m))
        else:
            r = float(rng.random()) * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, m - 1)
        centroids[i] = feats[idx]
        cand = np.einsum("id,id->i", feats - centroids[i], feats - centroids[i])
        np.minimum(d2, cand, out=d2)
    return centroids


def kmeans(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
) -> KMeansResult:
    """Lloyd iterations from a k-means++ start, fully seeded.

    Stops when the largest squared centroid displacement drops to
    ``tol`` or after ``max_iter`` rounds. Empty clusters are re-seeded
    to the point currently farthest from its own centroid. Identical
    inputs and seed give bit-identical results.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise EmptyInput("kmeans: no feature rows")
    m = feats.shape[0]
    if not 1 <= k <= m:
        raise InvalidK(f"kmeans: need 1 <= k <= {m}, got {k}")
    if max_iter < 1 or tol < 0:
        raise InvalidK(f"kmeans: need max_iter >= 1 and tol >= 0, got {max_iter}, {tol}")

    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(feats, k, rng)

    assign, point_d2 = _assign(feats, centroids)
    prev_inertia = float(point_d2.sum())
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        new_centroids = centroids.copy()
        counts = np.bincount(assign, minlength=k)
        for j in range(k):
            if counts[j]:
                new_centroids[j] = feats[assign == j].sum(axis=0) / counts[j]
        # Re-seed empty clusters on the farthest outlier, one point each.
        repair_d2 = point_d2.copy()
        for j in np.flatnonzero(counts == 0):
            far = int(np.argmax(repair_d2))
            new_centroids[j] = feats[far]
            repair_d2[far] = -1.0
        movement = float(np.einsum("jd,jd->j", new_centroids - centroids, new_centroids - centroids).max())
        centroids = new_centroids
        assign, point_d2 = _assign(feats, centroids)
        inertia = float(point_d2.sum())
        # Lloyd steps never increase the objective; guard against regressions.
        assert inertia <= prev_inertia + 1e-9 * max(1.0, prev_inertia)
        prev_inertia = inertia
        if movement <= tol:
            break
    return KMeansResult(
        centroids=centroids,
        assignments=assign,
        inertia=prev_inertia,
        iterations=iterations,
    )


def kmeans_dispersion(features: np.ndarray, k: int, seed: int) -> ScoreResult:
    """Dispersion score over k-means cluster assignments (weighted form)."""
    result = kmeans(features, k, seed)
    scored = dispersion_score(features, result.assignments, k, weighted=True)
    return ScoreResult(
        kind="kmeans-dispersion",
        value=scored.value,
        degenerate=scored.degenerate,
        counts=scored.counts,
    )
