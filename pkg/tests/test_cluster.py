import math

import numpy as np
import pytest

from fsep import dispersion_score, kmeans, kmeans_dispersion, pseudo_labels
from fsep.cluster import _assign, _plusplus_init
from fsep.errors import EmptyInput, InvalidK


def test_separated_pairs():
    feats = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
    result = kmeans(feats, 2, seed=0)
    got = sorted(tuple(np.round(c, 6)) for c in result.centroids)
    assert got == [(0.05, 0.0), (10.05, 0.0)]
    assert result.inertia == pytest.approx(0.01, abs=1e-12)
    # both pairs share a cluster
    assert result.assignments[0] == result.assignments[1]
    assert result.assignments[2] == result.assignments[3]


def test_k_equals_one_gives_global_mean(rng):
    feats = rng.standard_normal((20, 3))
    result = kmeans(feats, 1, seed=7)
    assert np.allclose(result.centroids[0], feats.mean(axis=0), atol=1e-12)
    assert np.all(result.assignments == 0)


def test_inertia_matches_assignment_reevaluation(rng):
    feats = rng.standard_normal((12, 2))
    result = kmeans(feats, 3, seed=5)
    recomputed = sum(
        float(((feats[i] - result.centroids[result.assignments[i]]) ** 2).sum())
        for i in range(12)
    )
    assert result.inertia == pytest.approx(recomputed, abs=1e-10)
    # converged solution is no worse than the k-means++ start
    init = _plusplus_init(np.asarray(feats, dtype=np.float64), 3, np.random.default_rng(5))
    _, init_d2 = _assign(np.asarray(feats, dtype=np.float64), init)
    assert result.inertia <= float(init_d2.sum()) + 1e-12


def test_assignments_point_to_nearest_centroid(rng):
    feats = rng.standard_normal((40, 4))
    result = kmeans(feats, 4, seed=11)
    dists = ((feats[:, None, :] - result.centroids[None, :, :]) ** 2).sum(axis=2)
    expected = dists.argmin(axis=1)
    assert np.array_equal(result.assignments, expected)


def test_determinism_bit_identical(rng):
    feats = rng.standard_normal((50, 6))
    a = kmeans(feats, 5, seed=42)
    b = kmeans(feats, 5, seed=42)
    assert np.array_equal(a.centroids, b.centroids)
    assert np.array_equal(a.assignments, b.assignments)
    assert a.inertia == b.inertia
    assert a.iterations == b.iterations
    c = kmeans(feats, 5, seed=43)
    assert not np.array_equal(a.assignments, c.assignments) or a.inertia != c.inertia


def test_duplicate_points_and_empty_cluster_repair():
    # more clusters than distinct values forces the repair path
    feats = np.array([[0.0, 0.0]] * 6 + [[5.0, 5.0]] * 2)
    result = kmeans(feats, 3, seed=3)
    assert result.inertia == pytest.approx(0.0, abs=1e-12)


def test_all_points_identical_degenerate():
    feats = np.ones((10, 3))
    score = kmeans_dispersion(feats, 2, seed=0)
    assert score.degenerate
    assert score.value == pytest.approx(math.log(1e-12))


def test_kmeans_dispersion_two_points():
    score = kmeans_dispersion(np.array([[1.0, 0.0], [-1.0, 0.0]]), 2, seed=0)
    assert score.value == pytest.approx(math.log(2), abs=1e-9)
    assert score.kind == "kmeans-dispersion"


def test_kmeans_dispersion_matches_pseudo_on_separated_blobs(rng):
    # blobs so well separated that the argmax partition and the k-means
    # partition coincide
    k, per, d = 3, 40, 5
    means = np.zeros((k, d))
    means[np.arange(k), np.arange(k)] = 20.0
    labels = np.repeat(np.arange(k), per)
    feats = means[labels] + 0.3 * rng.standard_normal((k * per, d))
    logits = feats @ (2 * means).T - (means**2).sum(axis=1)
    pseudo = dispersion_score(feats, pseudo_labels(logits), k).value
    viakm = kmeans_dispersion(feats, k, seed=0).value
    assert viakm == pytest.approx(pseudo, abs=1e-9)


def test_cluster_relabeling_leaves_dispersion_unchanged(rng):
    feats = rng.standard_normal((30, 4))
    assign = rng.integers(0, 3, size=30)
    relabel = np.array([2, 0, 1])
    a = dispersion_score(feats, assign, 3).value
    b = dispersion_score(feats, relabel[assign], 3).value
    assert a == pytest.approx(b, abs=1e-12)


def test_kmeans_argument_validation():
    with pytest.raises(EmptyInput):
        kmeans(np.empty((0, 2)), 1, seed=0)
    with pytest.raises(InvalidK):
        kmeans(np.ones((3, 2)), 4, seed=0)
    with pytest.raises(InvalidK):
        kmeans(np.ones((3, 2)), 0, seed=0)
