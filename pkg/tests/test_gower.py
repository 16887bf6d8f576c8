import numpy as np
import pytest

from araucana.gower import DistanceMetric, distance, distances_to
from araucana.tabular import FeatureSpec, Schema, SchemaError

from conftest import random_mixed_schema, random_rows


def test_identity(age_sex_schema):
    m = DistanceMetric(age_sex_schema)
    a = np.array([30.0, 0.0])
    assert distance(m, a, a) == 0.0


def test_hand_computed_age_sex_case(age_sex_schema):
    # (|30-50|/100 + 1) / 2 = 0.6
    m = DistanceMetric(age_sex_schema)
    d = distance(m, np.array([30.0, 0.0]), np.array([50.0, 1.0]))
    assert abs(d - 0.6) <= 1e-12


def test_all_categorical_maximal():
    schema = Schema(
        (
            FeatureSpec("a", "categorical", categories=("x", "y")),
            FeatureSpec("b", "categorical", categories=("u", "v", "w")),
        )
    )
    m = DistanceMetric(schema)
    assert distance(m, np.array([0.0, 0.0]), np.array([1.0, 2.0])) == 1.0


def test_constant_numeric_contributes_zero():
    schema = Schema(
        (
            FeatureSpec("c", "numeric", range=(3.0, 3.0)),
            FeatureSpec("a", "numeric", range=(0.0, 10.0)),
        )
    )
    m = DistanceMetric(schema)
    d = distance(m, np.array([3.0, 0.0]), np.array([3.0, 5.0]))
    assert abs(d - 0.25) <= 1e-12  # (0 + 0.5) / 2


def test_out_of_range_values_clamped(age_sex_schema):
    m = DistanceMetric(age_sex_schema)
    # 1e6 clamps to 100, so the numeric part is |0-100|/100 = 1
    d = distance(m, np.array([0.0, 0.0]), np.array([1e6, 0.0]))
    assert abs(d - 0.5) <= 1e-12


def test_symmetry_range_identity_random():
    rng = np.random.default_rng(42)
    for _ in range(25):
        schema = random_mixed_schema(rng)
        m = DistanceMetric(schema)
        rows = random_rows(rng, schema, 40)
        for _ in range(10):
            i, j = rng.integers(0, len(rows), size=2)
            a, b = rows[i], rows[j]
            d_ab = distance(m, a, b)
            d_ba = distance(m, b, a)
            assert d_ab == d_ba
            assert -1e-12 <= d_ab <= 1 + 1e-12
            assert distance(m, a, a) == 0.0


def test_monotone_in_single_numeric_gap(age_sex_schema):
    m = DistanceMetric(age_sex_schema)
    base = np.array([10.0, 1.0])
    last = -1.0
    for age in np.linspace(10, 100, 13):
        d = distance(m, base, np.array([age, 1.0]))
        assert d >= last - 1e-15
        last = d


def test_distances_to_matches_loop_and_edges(age_sex_schema):
    rng = np.random.default_rng(7)
    m = DistanceMetric(age_sex_schema)
    x = np.array([40.0, 0.0])
    rows = np.column_stack([rng.uniform(0, 100, 20), rng.integers(0, 2, 20).astype(float)])
    batch = distances_to(m, x, rows)
    loop = [distance(m, x, r) for r in rows]
    np.testing.assert_allclose(batch, loop, rtol=0, atol=0)
    assert distances_to(m, x, np.empty((0, 2))).tolist() == []
    np.testing.assert_array_equal(distances_to(m, x, x.reshape(1, -1)), [0.0])


def test_validation_errors(age_sex_schema):
    m = DistanceMetric(age_sex_schema)
    with pytest.raises(SchemaError):
        distance(m, np.array([30.0, 9.0]), np.array([30.0, 0.0]))


def test_euclidean_normalized_range_and_categorical_unit():
    schema = Schema(
        (
            FeatureSpec("a", "numeric", range=(0.0, 1.0)),
            FeatureSpec("b", "categorical", categories=("x", "y")),
        )
    )
    m = DistanceMetric(schema, "euclidean")
    # one categorical mismatch contributes exactly 1 to the squared sum
    d = distance(m, np.array([0.0, 0.0]), np.array([0.0, 1.0]))
    assert abs(d - 1.0 / np.sqrt(2.0)) <= 1e-12
    rng = np.random.default_rng(5)
    rows = random_rows(rng, schema, 50)
    x = rows[0]
    ds = distances_to(m, x, rows)
    assert (ds >= -1e-12).all() and (ds <= 1 + 1e-12).all()


def test_unknown_metric_kind(age_sex_schema):
    with pytest.raises(ValueError):
        DistanceMetric(age_sex_schema, "cosine")
