"""Deterministic Gaussian-mixture shift benchmarks.

The generator builds one labeled reference bundle and a grid of shifted
test bundles (``families`` x ``severities``) for a fixed linear
classifier, entirely from a counter-based seeded RNG (Philox), so the
same config always produces the same bytes.

Geometry: class means sit on orthogonal axes at distance ``mean_scale``
from the origin, with isotropic within-class spread ``sigma``. The
classifier is the nearest-class-mean rule written as an affine map
(weights 2*mu_j, bias -||mu_j||^2), which is Bayes-optimal for the
clean mixture.

Corruption at severity s for family f applies, in order: a geometric
amplification of the feature cloud around the class-mean center (rate
proportional to s * noise_scale and a per-family intensity), additive
per-sample Gaussian noise s * noise_scale * intensity, and a rigid mean
drift s * drift_scale along a fixed random unit vector per family. The
amplification changes class geometry for any labeling of the points,
the noise blurs cluster boundaries (raising true error), and the drift
decorrelates error from severity alone. Per-family intensities spread
error levels across families the way distinct corruption types do.
Setting noise_scale = 0 and drift_scale = 0 disables corruption
entirely, which is the uncorrupted control configuration.

Test-set class proportions follow a geometric progression so the
largest/smallest class ratio equals ``imbalance`` (1 = balanced).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundle import DatasetMeta, FeatureBundle, Manifest, write_bundle, write_manifest
from .errors import ConfigInvalid, DimensionMismatch
from .scores import pseudo_labels

# Geometric amplification per unit of severity * noise_scale; family
# intensity multiplies it. 1/12 puts the default suite's amplification
# at 1.25x for severity 5.
MEAN_EXPANSION_PER_NOISE = 1.0 / 12.0

# Per-family corruption intensity range (log-uniform).
INTENSITY_LOW = 0.7
INTENSITY_HIGH = 1.4

TOY_SIGMA = 0.5
TOY_PER_CLASS = 250


@dataclass(frozen=True)
class SyntheticConfig:
    """Full recipe for one benchmark suite."""

    k: int = 10
    d: int = 64
    train_per_class: int = 200
    test_m: int = 2000
    sigma: float = 1.0
    mean_scale: float = 4.0
    families: int = 5
    severities: int = 5
    noise_scale: float = 0.6
    drift_scale: float = 0.4
    imbalance: float = 1.0
    seed: int = 0

    def check(self) -> None:
        problems = []
        if self.k < 2:
            problems.append(f"k must be >= 2, got {self.k}")
        if self.d < self.k:
            problems.append(f"d must be >= k, got d={self.d}, k={self.k}")
        if self.train_per_class < 2:
            problems.append(f"train_per_class must be >= 2, got {self.train_per_class}")
        if self.test_m < self.k:
            problems.append(f"test_m must be >= k, got {self.test_m}")
        if not self.sigma > 0:
            problems.append(f"sigma must be > 0, got {self.sigma}")
        if not self.mean_scale > 0:
            problems.append(f"mean_scale must be > 0, got {self.mean_scale}")
        if self.families < 1:
            problems.append(f"families must be >= 1, got {self.families}")
        if self.severities < 1:
            problems.append(f"severities must be >= 1, got {self.severities}")
        if self.noise_scale < 0:
            problems.append(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.drift_scale < 0:
            problems.append(f"drift_scale must be >= 0, got {self.drift_scale}")
        if self.imbalance < 1:
            problems.append(f"imbalance must be >= 1, got {self.imbalance}")
        if problems:
            raise ConfigInvalid("; ".join(problems))


@dataclass(frozen=True)
class LinearClassifier:
    """Affine map z -> weights @ z + biases."""

    weights: np.ndarray  # (k, d)
    biases: np.ndarray  # (k,)


def nearest_class_mean_classifier(means: np.ndarray) -> LinearClassifier:
    """Nearest-class-mean rule as an affine map: row j = 2*mu_j, bias -||mu_j||^2."""
    means = np.asarray(means, dtype=np.float64)
    return LinearClassifier(weights=2.0 * means, biases=-np.einsum("jd,jd->j", means, means))


def classifier_logits(classifier: LinearClassifier, features: np.ndarray) -> np.ndarray:
    """Row-wise affine map; float64 result."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != classifier.weights.shape[1]:
        raise DimensionMismatch(
            f"features have {feats.shape[1] if feats.ndim == 2 else '?'} columns, "
            f"classifier expects {classifier.weights.shape[1]}"
        )
    return feats @ classifier.weights.T + classifier.biases


def class_counts(total: int, k: int, imbalance: float) -> np.ndarray:
    """Geometric class proportions with largest/smallest ratio ``imbalance``.

    Rounded by largest remainder so the counts sum to ``total`` exactly;
    imbalance 1 yields counts differing by at most one.
    """
    weights = float(imbalance) ** (-np.arange(k) / (k - 1))
    target = total * weights / weights.sum()
    counts = np.floor(target).astype(np.int64)
    remainder = total - int(counts.sum())
    fractions = target - np.floor(target)
    counts[np.argsort(-fractions, kind="stable")[:remainder]] += 1
    return counts


def _finish_bundle(
    features64: np.ndarray,
    labels: np.ndarray,
    classifier: LinearClassifier,
    name: str,
    shift_family: str,
    severity: int,
    k: int,
) -> FeatureBundle:
    """Cast to storage dtype, recompute logits, and fill in the true error."""
    feats32 = np.ascontiguousarray(features64, dtype=np.float32)
    logits32 = np.ascontiguousarray(classifier_logits(classifier, feats32), dtype=np.float32)
    pred = pseudo_labels(logits32)
    err = float((pred != labels).mean())
    meta = DatasetMeta(name=name, shift_family=shift_family, severity=severity, k=k, true_error=err)
    return FeatureBundle(features=feats32, logits=logits32, meta=meta, labels=labels)


def generate_suite(
    cfg: SyntheticConfig,
) -> tuple[FeatureBundle, list[FeatureBundle], LinearClassifier]:
    """Generate the reference bundle, all test bundles, and the classifier.

    Every (family, severity) pair draws from an independent sub-stream
    of the config seed, so the suite is reproducible as a whole and
    bundle-by-bundle.
    """
    cfg.check()
    means = np.zeros((cfg.k, cfg.d), dtype=np.float64)
    means[np.arange(cfg.k), np.arange(cfg.k)] = cfg.mean_scale
    center = means.mean(axis=0)
    classifier = nearest_class_mean_classifier(means)

    root = np.random.SeedSequence(cfg.seed)
    ref_seq, *family_seqs = root.spawn(1 + cfg.families)

    ref_rng = np.random.Generator(np.random.Philox(ref_seq))
    ref_labels = np.repeat(np.arange(cfg.k, dtype=np.int64), cfg.train_per_class)
    ref_features = means[ref_labels] + cfg.sigma * ref_rng.standard_normal(
        (ref_labels.shape[0], cfg.d)
    )
    reference = _finish_bundle(
        ref_features, ref_labels, classifier, "reference", "none", 0, cfg.k
    )

    tests: list[FeatureBundle] = []
    counts = class_counts(cfg.test_m, cfg.k, cfg.imbalance)
    labels = np.repeat(np.arange(cfg.k, dtype=np.int64), counts)
    for f, family_seq in enumerate(family_seqs):
        fam_seq, *bundle_seqs = family_seq.spawn(1 + cfg.severities)
        fam_rng = np.random.Generator(np.random.Philox(fam_seq))
        direction = fam_rng.standard_normal(cfg.d)
        direction /= np.linalg.norm(direction)
        intensity = float(
            np.exp(fam_rng.uniform(np.log(INTENSITY_LOW), np.log(INTENSITY_HIGH)))
        )
        family_name = f"family{f:02d}"
        for s, bundle_seq in enumerate(bundle_seqs, start=1):
            rng = np.random.Generator(np.random.Philox(bundle_seq))
            clean = means[labels] + cfg.sigma * rng.standard_normal((labels.shape[0], cfg.d))
            amp = 1.0 + MEAN_EXPANSION_PER_NOISE * cfg.noise_scale * intensity * s
            # written so that amp == 1 with zero noise/drift is an exact identity
            corrupted = (
                clean
                + (amp - 1.0) * (clean - center)
                + s * intensity * cfg.noise_scale * rng.standard_normal(clean.shape)
                + s * cfg.drift_scale * direction
            )
            tests.append(
                _finish_bundle(
                    corrupted, labels, classifier, f"{family_name}_s{s}", family_name, s, cfg.k
                )
            )
    return reference, tests, classifier


def toy_translation_scenario(
    base_seed: int, magnitudes: list[float]
) -> tuple[list[FeatureBundle], LinearClassifier]:
    """Two-Gaussian toy: one fixed sample translated along the second axis.

    Class means sit at (-1, 0) and (1, 0); the nearest-class-mean
    boundary is the vertical axis, so translating the test cloud by
    (0, c) never changes a prediction while moving its distribution
    arbitrarily far from the reference.
    """
    if len(magnitudes) == 0:
        raise ConfigInvalid("magnitudes must be non-empty")
    if any(c < 0 for c in magnitudes):
        raise ConfigInvalid("magnitudes must be non-negative")
    means = np.array([[-1.0, 0.0], [1.0, 0.0]])
    classifier = nearest_class_mean_classifier(means)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(base_seed)))
    labels = np.repeat(np.arange(2, dtype=np.int64), TOY_PER_CLASS)
    base = means[labels] + TOY_SIGMA * rng.standard_normal((labels.shape[0], 2))

    bundles = []
    for idx, c in enumerate(magnitudes):
        shifted = base + np.array([0.0, float(c)])
        bundles.append(
            _finish_bundle(
                shifted, labels, classifier, f"toy_shift_{idx}", "y_translation", idx, 2
            )
        )
    return bundles, classifier


@dataclass
class SuiteLayout:
    """Where a written suite landed on disk."""

    out_dir: Path
    manifest_path: Path
    manifest: Manifest
    bundle_dirs: list[Path] = field(default_factory=list)


def write_suite(cfg: SyntheticConfig, out_dir: Path | str) -> SuiteLayout:
    """Generate a suite and write it under ``out_dir`` with a manifest."""
    reference, tests, _ = generate_suite(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_bundle(reference, out / "reference")
    dirs = [out / "reference"]
    test_names = []
    for bundle in tests:
        write_bundle(bundle, out / bundle.meta.name)
        dirs.append(out / bundle.meta.name)
        test_names.append(bundle.meta.name)

    manifest = Manifest(reference="reference", tests=test_names, k=cfg.k)
    manifest_path = out / "manifest.json"
    write_manifest(manifest_path, manifest)
    return SuiteLayout(out_dir=out, manifest_path=manifest_path, manifest=manifest, bundle_dirs=dirs)
