"""Benchmark harness: true error, score regression, and reports.

Given a manifest (one labeled reference bundle plus test bundles), the
harness computes requested scores per test bundle, fits an ordinary
least squares line from score to true error, and reports R-squared plus
Spearman rank correlation. Spearman is taken between regression-
predicted and true errors, so negatively sloped scores that fit well
still score near +1; the raw score-vs-error rank correlation is emitted
alongside for transparency.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .bundle import FeatureBundle, Manifest, read_bundle
from .cluster import kmeans_dispersion
from .errors import (
    DegenerateInput,
    DimensionMismatch,
    EmptyInput,
    FsepError,
    InvariantViolation,
    LengthMismatch,
    MissingReference,
    MissingTruth,
)
from .scores import ScoreResult, compactness_score, dispersion_score, pseudo_labels

METRICS = (
    "dispersion",
    "dispersion-unweighted",
    "compactness",
    "confscore",
    "entropy",
    "atc",
    "frechet",
    "mmd",
    "kmeans-dispersion",
)
REFERENCE_METRICS = frozenset({"atc", "frechet", "mmd"})
LABEL_SOURCES = ("pseudo", "true")


def true_error(pred: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of positions where prediction and label disagree."""
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if pred.shape != labels.shape:
        raise LengthMismatch(f"pred length {pred.shape} != labels length {labels.shape}")
    if pred.size == 0:
        raise EmptyInput("true_error: empty sequences")
    return float((pred != labels).mean())


def _fractional_ranks(values: np.ndarray) -> np.ndarray:
    """Average-fractional ranks (1-based); ties share the mean rank."""
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    sorter = np.argsort(v, kind="stable")
    inv = np.empty(n, dtype=np.int64)
    inv[sorter] = np.arange(n)
    sv = v[sorter]
    group_start = np.r_[True, sv[1:] != sv[:-1]]
    dense = np.cumsum(group_start)[inv]
    bounds = np.r_[np.flatnonzero(group_start), n]
    avg = 0.5 * (bounds[1:] + bounds[:-1] + 1)
    return avg[dense - 1]


def spearman(xs: np.ndarray, ys: np.ndarray) -> float:
    """Pearson correlation of average-fractional ranks."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise LengthMismatch(f"sequences differ in length: {xs.shape} vs {ys.shape}")
    if xs.size < 2:
        raise DegenerateInput("spearman: need at least 2 points")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise DegenerateInput("spearman: constant sequence has no rank order")
    rx = _fractional_ranks(xs)
    ry = _fractional_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


@dataclass(frozen=True)
class RegressionFit:
    """OLS fit of error on score plus goodness-of-fit summaries."""

    slope: float
    intercept: float
    r2: float
    spearman: float
    n_points: int

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "spearman": self.spearman,
            "n_points": self.n_points,
        }


def fit_regression(points: list[tuple[float, float]]) -> RegressionFit:
    """Closed-form OLS of error on score.

    r2 = 1 - SS_res / SS_tot, with the convention that a constant error
    sequence (SS_tot = 0) gives r2 = 1 when SS_res = 0 and 0 otherwise.
    The spearman field correlates regression-predicted against true
    errors (0.0 when either side is constant).
    """
    if len(points) < 2:
        raise DegenerateInput(f"fit_regression: need at least 2 points, got {len(points)}")
    x = np.asarray([p[0] for p in points], dtype=np.float64)
    y = np.asarray([p[1] for p in points], dtype=np.float64)
    if np.all(x == x[0]):
        raise DegenerateInput("fit_regression: all scores identical")
    xc = x - x.mean()
    slope = float((xc * (y - y.mean())).sum() / (xc * xc).sum())
    intercept = float(y.mean() - slope * x.mean())
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    try:
        rho = spearman(pred, y)
    except DegenerateInput:
        rho = 0.0
    return RegressionFit(slope=slope, intercept=intercept, r2=r2, spearman=rho, n_points=len(points))


@dataclass
class ReportRow:
    """Scores and truth for a single test bundle."""

    bundle: str
    family: str
    severity: int
    true_error: float
    scores: dict[str, float]
    seconds: float

    def to_json_dict(self) -> dict:
        return {
            "bundle": self.bundle,
            "family": self.family,
            "severity": self.severity,
            "true_error": self.true_error,
            "scores": dict(self.scores),
            "seconds": self.seconds,
        }


@dataclass
class BenchmarkReport:
    """Per-bundle rows (manifest order) and per-metric regression fits."""

    metrics: list[str]
    rows: list[ReportRow]
    fits: dict[str, RegressionFit]
    raw_spearman: dict[str, float | None] = field(default_factory=dict)

    def to_csv(self) -> str:
        header = ["bundle", "family", "severity", "true_error", *self.metrics]
        lines = [",".join(header)]
        for row in self.rows:
            cells = [
                row.bundle,
                row.family,
                str(row.severity),
                repr(row.true_error),
                *(repr(row.scores[m]) for m in self.metrics),
            ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "fits": {m: f.to_json_dict() for m, f in self.fits.items()},
            "raw_spearman": dict(self.raw_spearman),
            "rows": [r.to_json_dict() for r in self.rows],
        }


class _ReferenceContext:
    """Lazily computed reference-bundle artifacts shared across metrics."""

    def __init__(self, bundle: FeatureBundle):
        self.bundle = bundle
        self._atc = None
        self._summary = None

    @property
    def atc_threshold(self) -> baselines.AtcThreshold:
        if self._atc is None:
            if self.bundle.labels is None:
                raise InvariantViolation("reference bundle has no labels")
            self._atc = baselines.atc_calibrate(self.bundle.logits, self.bundle.labels)
        return self._atc

    @property
    def summary(self) -> baselines.GaussianSummary:
        if self._summary is None:
            self._summary = baselines.gaussian_summary(self.bundle.features)
        return self._summary


def score_bundle(
    bundle: FeatureBundle,
    metric: str,
    reference: FeatureBundle | _ReferenceContext | None = None,
    label_source: str = "pseudo",
    seed: int = 0,
) -> ScoreResult:
    """Compute one named score for one bundle.

    ``reference`` is required for atc/frechet/mmd. ``label_source``
    selects the clustering used by dispersion and compactness: argmax
    pseudo labels (default) or the bundle's stored ground truth.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if label_source not in LABEL_SOURCES:
        raise ValueError(f"unknown label source {label_source!r}")
    if metric in REFERENCE_METRICS:
        if reference is None:
            raise MissingReference(f"metric {metric!r} requires a reference bundle")
        if isinstance(reference, FeatureBundle):
            reference = _ReferenceContext(reference)

    if metric in ("dispersion", "dispersion-unweighted", "compactness"):
        if label_source == "true":
            if bundle.labels is None:
                raise MissingTruth("labels absent: bundle has no ground-truth labels")
            labels = bundle.labels
        else:
            labels = pseudo_labels(bundle.logits)
        if metric == "compactness":
            return compactness_score(bundle.features, labels, bundle.meta.k)
        weighted = metric == "dispersion"
        return dispersion_score(bundle.features, labels, bundle.meta.k, weighted=weighted)
    if metric == "confscore":
        return baselines.conf_score(bundle.logits)
    if metric == "entropy":
        return baselines.entropy_score(bundle.logits)
    if metric == "atc":
        value = baselines.atc_predict(bundle.logits, reference.atc_threshold)
        return ScoreResult(kind="atc", value=value)
    if metric == "frechet":
        value = baselines.frechet_distance(reference.summary, baselines.gaussian_summary(bundle.features))
        return ScoreResult(kind="frechet", value=value)
    if metric == "mmd":
        value = baselines.mmd_rbf(reference.bundle.features, bundle.features)
        return ScoreResult(kind="mmd", value=value)
    # kmeans-dispersion
    return kmeans_dispersion(bundle.features, bundle.meta.k, seed)


def _bundle_truth(bundle: FeatureBundle) -> float:
    if bundle.meta.true_error is not None:
        return float(bundle.meta.true_error)
    if bundle.labels is not None:
        return true_error(pseudo_labels(bundle.logits), bundle.labels)
    raise MissingTruth("bundle has neither meta.true_error nor labels")


def run_benchmark(
    manifest: Manifest,
    metrics: list[str],
    seed: int = 0,
    label_source: str = "pseudo",
    base_dir: Path | str = ".",
    threads: int | None = None,
) -> BenchmarkReport:
    """Score every test bundle and fit one regression per metric.

    Bundle paths in the manifest resolve relative to ``base_dir``. Test
    bundles are scored concurrently (``threads`` workers, default all
    cores); rows keep manifest order, so results are independent of the
    worker count.
    """
    base = Path(base_dir)
    ordered_metrics = list(dict.fromkeys(metrics))
    for metric in ordered_metrics:
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if not manifest.tests:
        raise DegenerateInput("manifest has no test bundles")

    reference = None
    if any(m in REFERENCE_METRICS for m in ordered_metrics):
        ref_dir = base / manifest.reference
        if not manifest.reference or not ref_dir.is_dir():
            raise MissingReference(f"reference bundle not found: {ref_dir}")
        ref_bundle = read_bundle(ref_dir)
        if ref_bundle.labels is None:
            raise InvariantViolation(f"reference bundle {ref_dir} has no labels")
        reference = _ReferenceContext(ref_bundle)

    def score_one(rel: str) -> tuple[ReportRow, int]:
        start = time.perf_counter()
        bundle = read_bundle(base / rel)
        if bundle.meta.k != manifest.k:
            raise DimensionMismatch(f"bundle k={bundle.meta.k} != manifest k={manifest.k}")
        if reference is not None and bundle.d != reference.bundle.d:
            raise DimensionMismatch(
                f"bundle d={bundle.d} != reference d={reference.bundle.d}"
            )
        truth = _bundle_truth(bundle)
        scores = {
            m: score_bundle(bundle, m, reference=reference, label_source=label_source, seed=seed).value
            for m in ordered_metrics
        }
        row = ReportRow(
            bundle=bundle.meta.name,
            family=bundle.meta.shift_family,
            severity=bundle.meta.severity,
            true_error=truth,
            scores=scores,
            seconds=time.perf_counter() - start,
        )
        return row, bundle.d

    def annotated(rel: str) -> tuple[ReportRow, int]:
        try:
            return score_one(rel)
        except FsepError as exc:
            raise type(exc)(f"{rel}: {exc}") from exc

    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    if workers == 1:
        scored = [annotated(rel) for rel in manifest.tests]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(annotated, manifest.tests))
    rows = [row for row, _ in scored]
    dims = [d for _, d in scored]
    if any(d != dims[0] for d in dims):
        raise DimensionMismatch(f"test bundles disagree on feature dimension: {sorted(set(dims))}")

    fits: dict[str, RegressionFit] = {}
    raw_rho: dict[str, float | None] = {}
    errs = [row.true_error for row in rows]
    for metric in ordered_metrics:
        values = [row.scores[metric] for row in rows]
        fits[metric] = fit_regression(list(zip(values, errs)))
        try:
            raw_rho[metric] = spearman(np.asarray(values), np.asarray(errs))
        except DegenerateInput:
            raw_rho[metric] = None
    return BenchmarkReport(metrics=ordered_metrics, rows=rows, fits=fits, raw_spearman=raw_rho)
