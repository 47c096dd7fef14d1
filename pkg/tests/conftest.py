import numpy as np
import pytest

from fsep import DatasetMeta, FeatureBundle


def make_bundle(features, logits, k, labels=None, name="test", family="none",
                severity=0, true_error=None):
    meta = DatasetMeta(name=name, shift_family=family, severity=severity, k=k,
                       true_error=true_error)
    return FeatureBundle(features=np.asarray(features), logits=np.asarray(logits),
                         meta=meta, labels=labels)


def random_bundle(rng, m=20, d=4, k=3, with_labels=True):
    features = rng.standard_normal((m, d))
    logits = rng.standard_normal((m, k))
    labels = rng.integers(0, k, size=m) if with_labels else None
    return make_bundle(features, logits, k, labels=labels)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
