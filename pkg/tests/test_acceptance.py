"""Acceptance suite.

One test per acceptance criterion, each at its stated tolerance,
printing a PASS line on success (run with ``pytest -s`` to see them).
The synthetic suites are built through the CLI synth command exactly as
a user would build them.
"""

import math

import numpy as np
import pytest
import scipy.stats

from fsep import (
    GaussianSummary,
    SyntheticConfig,
    atc_calibrate,
    atc_predict,
    dispersion_score,
    fit_regression,
    frechet_distance,
    gaussian_summary,
    generate_suite,
    kmeans_dispersion,
    mmd_rbf,
    pseudo_labels,
    read_bundle,
    read_manifest,
    run_benchmark,
    spearman,
    toy_translation_scenario,
)
from fsep.cli import main


def _ok(line: str) -> None:
    print(f"PASS {line}")


@pytest.fixture(scope="module")
def default_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("default_suite")
    assert main(["synth", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def imbalanced_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("imbalanced_suite")
    assert main(["synth", "--out", str(out), "--imbalance", "100"]) == 0
    return out


@pytest.fixture(scope="module")
def default_bundles(default_suite):
    manifest = read_manifest(default_suite / "manifest.json")
    return [read_bundle(default_suite / rel) for rel in manifest.tests]


def test_dispersion_translation_invariance():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        feats = rng.standard_normal((500, 32))
        labels = rng.integers(0, 10, size=500)
        shift = rng.standard_normal(32) * rng.uniform(0.1, 20.0)
        base = dispersion_score(feats, labels, 10).value
        moved = dispersion_score(feats + shift, labels, 10).value
        worst = max(worst, abs(moved - base))
    assert worst <= 1e-9
    _ok(f"dispersion translation invariance: max deviation {worst:.2e} <= 1e-9")


def test_dispersion_scaling_law():
    rng = np.random.default_rng(7)
    feats = rng.standard_normal((500, 32))
    labels = rng.integers(0, 10, size=500)
    base = dispersion_score(feats, labels, 10).value
    worst = 0.0
    for c in (0.5, 2.0, 10.0):
        scaled = dispersion_score(feats * c, labels, 10).value
        worst = max(worst, abs(scaled - (base + 2.0 * math.log(c))))
    assert worst <= 1e-9
    _ok(f"dispersion scaling law (2 ln c): max deviation {worst:.2e} <= 1e-9")


def test_toy_translation_reproduction():
    magnitudes = [float(c) for c in range(11)]
    bundles, _ = toy_translation_scenario(0, magnitudes)
    base_pred = pseudo_labels(bundles[0].logits)
    for b in bundles[1:]:
        assert np.array_equal(pseudo_labels(b.logits), base_pred)
    scores = [dispersion_score(b.features, pseudo_labels(b.logits), 2).value for b in bundles]
    spread = max(scores) - min(scores)
    assert spread < 1e-6
    reference = gaussian_summary(bundles[0].features)
    dists = [frechet_distance(reference, gaussian_summary(b.features)) for b in bundles]
    assert all(b > a for a, b in zip(dists, dists[1:]))
    _ok(
        "toy translation: predictions exactly invariant, dispersion spread "
        f"{spread:.2e} < 1e-6, frechet strictly increasing over 11 magnitudes"
    )


def test_synthetic_benchmark_correlation(default_suite):
    bundle_dirs = [p for p in default_suite.iterdir() if p.is_dir()]
    assert len(bundle_dirs) == 26  # 1 reference + 5 families x 5 severities
    manifest = read_manifest(default_suite / "manifest.json")
    report = run_benchmark(manifest, ["dispersion"], base_dir=default_suite)
    fit = report.fits["dispersion"]
    assert fit.r2 >= 0.90
    assert fit.spearman >= 0.95
    _ok(
        f"synthetic benchmark: dispersion R2 {fit.r2:.3f} >= 0.90, "
        f"predicted-vs-true rho {fit.spearman:.3f} >= 0.95"
    )


def test_imbalance_weighted_advantage(imbalanced_suite):
    manifest = read_manifest(imbalanced_suite / "manifest.json")
    report = run_benchmark(
        manifest, ["dispersion", "dispersion-unweighted"], base_dir=imbalanced_suite
    )
    weighted = report.fits["dispersion"].r2
    unweighted = report.fits["dispersion-unweighted"].r2
    assert weighted >= unweighted
    assert weighted >= 0.85
    _ok(
        f"imbalance 100: weighted R2 {weighted:.3f} >= unweighted {unweighted:.3f} "
        "and >= 0.85"
    )


def test_small_sample_property(default_bundles):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(50)))
    points = []
    for bundle in default_bundles:
        idx = rng.choice(bundle.m, size=50, replace=False)
        labels = pseudo_labels(bundle.logits[idx])
        score = dispersion_score(bundle.features[idx], labels, bundle.meta.k).value
        points.append((score, bundle.meta.true_error))
    fit = fit_regression(points)
    assert fit.r2 >= 0.80
    _ok(f"small-sample (50 rows/bundle): dispersion R2 {fit.r2:.3f} >= 0.80")


def test_frechet_oracle_equivalence():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 8))
        mu_a, mu_b = rng.standard_normal(d) * 2, rng.standard_normal(d) * 2
        la, lb = rng.uniform(0.05, 9.0, d), rng.uniform(0.05, 9.0, d)
        got = frechet_distance(
            GaussianSummary(mean=mu_a, covariance=np.diag(la)),
            GaussianSummary(mean=mu_b, covariance=np.diag(lb)),
        )
        expected = float(((mu_a - mu_b) ** 2).sum() + ((np.sqrt(la) - np.sqrt(lb)) ** 2).sum())
        worst = max(worst, abs(got - expected))
    assert worst <= 1e-8
    _ok(f"frechet diagonal closed form: max deviation {worst:.2e} <= 1e-8")


def test_mmd_oracle_equivalence():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(20):
        m, n = int(rng.integers(2, 51)), int(rng.integers(2, 51))
        x = rng.standard_normal((m, 4))
        y = rng.standard_normal((n, 4)) + rng.uniform(0, 1)
        sigma = float(rng.uniform(0.5, 3.0))
        got = mmd_rbf(x, y, bandwidth=sigma)

        def kernel_mean(a, b):
            total = math.fsum(
                math.exp(-float(((ra - rb) ** 2).sum()) / (2 * sigma**2))
                for ra in a
                for rb in b
            )
            return total / (len(a) * len(b))

        expected = kernel_mean(x, x) + kernel_mean(y, y) - 2 * kernel_mean(x, y)
        worst = max(worst, abs(got - max(expected, 0.0)))
    assert worst <= 1e-10
    x = rng.standard_normal((30, 4))
    identical = mmd_rbf(x, x.copy())
    assert identical <= 1e-12
    _ok(
        f"mmd brute-force oracle: max deviation {worst:.2e} <= 1e-10; "
        f"identical sets {identical:.2e} <= 1e-12"
    )


def test_atc_calibration_consistency(default_suite):
    reference = read_bundle(default_suite / "reference")
    half = reference.m // 2
    cal_logits, cal_labels = reference.logits[:half], reference.labels[:half]
    hold_logits, hold_labels = reference.logits[half:], reference.labels[half:]

    th = atc_calibrate(cal_logits, cal_labels)
    predicted_cal = atc_predict(cal_logits, th)
    from fsep.baselines import softmax

    conf = softmax(cal_logits).max(axis=1)
    tie_mass = float((conf == th.t).mean())
    assert abs(predicted_cal - th.calibration_error) <= 1.0 / half + tie_mass + 1e-12

    predicted_hold = atc_predict(hold_logits, th)
    true_hold = float((pseudo_labels(hold_logits) != hold_labels).mean())
    assert abs(predicted_hold - true_hold) <= 0.05
    _ok(
        f"atc: calibration-set error reproduced within 1/n + ties; hold-out "
        f"|{predicted_hold:.4f} - {true_hold:.4f}| <= 0.05"
    )


def test_kmeans_variant_agreement():
    cfg = SyntheticConfig(mean_scale=10.0, sigma=0.5, noise_scale=0.0,
                          drift_scale=0.0, families=1, severities=1, seed=0)
    _, tests, _ = generate_suite(cfg)
    bundle = tests[0]
    via_pseudo = dispersion_score(
        bundle.features, pseudo_labels(bundle.logits), cfg.k
    ).value
    via_kmeans = kmeans_dispersion(bundle.features, cfg.k, seed=0).value
    assert abs(via_kmeans - via_pseudo) <= 1e-6
    _ok(
        f"kmeans variant parity on separated blobs: |{via_kmeans:.6f} - "
        f"{via_pseudo:.6f}| <= 1e-6"
    )


def test_regression_and_rank_oracles():
    rng = np.random.default_rng(31337)
    worst_ols = 0.0
    worst_rho = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 40))
        x = np.round(rng.standard_normal(n) * 2, 1)  # rounding forces ties
        if np.all(x == x[0]):
            continue
        y = rng.standard_normal(n)
        fit = fit_regression(list(zip(x, y)))
        design = np.vstack([x, np.ones(n)]).T
        slope, intercept = np.linalg.lstsq(design, y, rcond=None)[0]
        worst_ols = max(worst_ols, abs(fit.slope - slope), abs(fit.intercept - intercept))
        if not np.all(y == y[0]):
            oracle = scipy.stats.spearmanr(x, y).statistic
            worst_rho = max(worst_rho, abs(spearman(x, y) - oracle))
    assert worst_ols <= 1e-10
    assert worst_rho <= 1e-10
    _ok(
        f"regression/rank oracles over 100 instances: OLS deviation "
        f"{worst_ols:.2e}, spearman deviation {worst_rho:.2e} (both <= 1e-10)"
    )


def test_label_source_sensitivity(default_suite):
    manifest = read_manifest(default_suite / "manifest.json")
    pseudo_fit = run_benchmark(
        manifest, ["dispersion"], base_dir=default_suite, label_source="pseudo"
    ).fits["dispersion"]
    true_fit = run_benchmark(
        manifest, ["dispersion"], base_dir=default_suite, label_source="true"
    ).fits["dispersion"]
    gap = abs(pseudo_fit.r2 - true_fit.r2)
    assert gap <= 0.05
    _ok(
        f"label-source parity: pseudo R2 {pseudo_fit.r2:.3f} vs true R2 "
        f"{true_fit.r2:.3f}, gap {gap:.3f} <= 0.05"
    )
