"""Feature-separability scores for predicting accuracy on shifted, unlabeled test sets."""

__version__ = "0.1.0"

from .baselines import (
    AtcThreshold,
    GaussianSummary,
    atc_calibrate,
    atc_predict,
    conf_score,
    entropy_score,
    frechet_distance,
    gaussian_summary,
    mmd_rbf,
)
from .bundle import (
    DatasetMeta,
    FeatureBundle,
    Manifest,
    read_bundle,
    read_manifest,
    validate_bundle,
    write_bundle,
    write_manifest,
)
from .cluster import KMeansResult, kmeans, kmeans_dispersion
from .harness import (
    BenchmarkReport,
    RegressionFit,
    fit_regression,
    run_benchmark,
    score_bundle,
    spearman,
    true_error,
)
from .scores import (
    ClassCentroids,
    ScoreResult,
    class_centroids,
    compactness_score,
    dispersion_score,
    pseudo_labels,
)
from .synth import (
    LinearClassifier,
    SyntheticConfig,
    classifier_logits,
    generate_suite,
    nearest_class_mean_classifier,
    toy_translation_scenario,
    write_suite,
)

__all__ = [
    "AtcThreshold",
    "BenchmarkReport",
    "ClassCentroids",
    "DatasetMeta",
    "FeatureBundle",
    "GaussianSummary",
    "KMeansResult",
    "LinearClassifier",
    "Manifest",
    "RegressionFit",
    "ScoreResult",
    "SyntheticConfig",
    "atc_calibrate",
    "atc_predict",
    "class_centroids",
    "classifier_logits",
    "compactness_score",
    "conf_score",
    "dispersion_score",
    "entropy_score",
    "fit_regression",
    "frechet_distance",
    "gaussian_summary",
    "generate_suite",
    "kmeans",
    "kmeans_dispersion",
    "mmd_rbf",
    "nearest_class_mean_classifier",
    "pseudo_labels",
    "read_bundle",
    "read_manifest",
    "run_benchmark",
    "score_bundle",
    "spearman",
    "toy_translation_scenario",
    "true_error",
    "validate_bundle",
    "write_bundle",
    "write_manifest",
    "write_suite",
]
