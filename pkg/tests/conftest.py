import numpy as np
import pytest

from araucana.tabular import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    FeatureSpec,
    Schema,
    TargetSpec,
)


@pytest.fixture
def age_sex_schema():
    return Schema(
        (
            FeatureSpec("age", "numeric", range=(0.0, 100.0)),
            FeatureSpec("sex", "categorical", categories=("M", "F")),
        ),
        TargetSpec("label", CLASSIFICATION, classes=("0", "1")),
    )


@pytest.fixture
def two_cat_schema():
    return Schema(
        (
            FeatureSpec("a", "categorical", categories=("0", "1")),
            FeatureSpec("b", "categorical", categories=("0", "1")),
        ),
        TargetSpec("label", CLASSIFICATION, classes=("0", "1")),
    )


def random_mixed_schema(rng, n_num=None, n_cat=None, n_classes=2):
    """A schema with random feature kinds, ranges, and category sizes."""
    if n_num is None:
        n_num = int(rng.integers(0, 4))
    if n_cat is None:
        n_cat = int(rng.integers(0, 4))
    if n_num + n_cat == 0:
        n_num = 1
    feats = []
    for i in range(n_num):
        lo = float(rng.uniform(-5, 5))
        hi = lo + float(rng.uniform(0, 10))
        feats.append(FeatureSpec(f"n{i}", "numeric", range=(lo, hi)))
    for i in range(n_cat):
        size = int(rng.integers(2, 5))
        feats.append(
            FeatureSpec(f"c{i}", "categorical", categories=tuple(f"v{k}" for k in range(size)))
        )
    target = TargetSpec("label", CLASSIFICATION, classes=tuple(str(k) for k in range(n_classes)))
    return Schema(tuple(feats), target)


def random_rows(rng, schema, n):
    """Rows conforming to schema; numerics uniform in the schema range."""
    X = np.empty((n, schema.n_features))
    for i, f in enumerate(schema.features):
        if f.is_numeric:
            lo, hi = f.range
            X[:, i] = rng.uniform(lo, hi, size=n)
        else:
            X[:, i] = rng.integers(0, len(f.categories), size=n)
    return X


def make_dataset(rng, schema, n):
    X = random_rows(rng, schema, n)
    if schema.target is None or schema.target.kind == REGRESSION:
        y = rng.standard_normal(n)
    else:
        y = rng.integers(0, len(schema.target.classes), size=n)
    return Dataset(schema, X, y)
