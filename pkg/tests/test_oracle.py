import sys
from pathlib import Path

import numpy as np
import pytest

from araucana.cart import CartConfig, fit_tree, predict_batch
from araucana.oracle import (
    BuiltinOracle,
    ForestConfig,
    OracleError,
    PrecomputedOracle,
    SubprocessOracle,
    ensure_same_schema,
    load_model,
    save_model,
    train_forest,
    train_knn,
)
from araucana.tabular import Dataset, SynthSpec, synth_dataset

from conftest import make_dataset, random_mixed_schema, random_rows

STUB = Path(__file__).parent / "stub_oracle.py"


def stub_command(extra=""):
    return f"{sys.executable} {STUB} {extra}".strip()


def test_forest_reduces_to_single_cart():
    ds = synth_dataset(SynthSpec("moons2d", 80), seed=2)
    forest = train_forest(ds, ForestConfig(n_trees=1, bootstrap=False,
                                           feature_subsample=ds.schema.n_features, seed=0))
    tree = fit_tree(ds.X, ds.y, ds.schema, CartConfig())
    rng = np.random.default_rng(0)
    probe = random_rows(rng, ds.schema, 200)
    np.testing.assert_array_equal(forest.predict_batch(probe), predict_batch(tree, probe))


def test_forest_determinism_and_batch_loop_equivalence():
    ds = synth_dataset(SynthSpec("imbalanced_mixed", 150), seed=4)
    a = train_forest(ds, ForestConfig(n_trees=10, seed=9))
    b = train_forest(ds, ForestConfig(n_trees=10, seed=9))
    rng = np.random.default_rng(1)
    probe = random_rows(rng, ds.schema, 60)
    np.testing.assert_array_equal(a.predict_batch(probe), b.predict_batch(probe))
    loop = np.concatenate([a.predict_batch(row.reshape(1, -1)) for row in probe])
    np.testing.assert_array_equal(a.predict_batch(probe), loop)


def test_forest_learns_xor_mixed_training_set():
    ds = synth_dataset(SynthSpec("xor_mixed", 500), seed=7)
    forest = train_forest(ds, ForestConfig(seed=3))
    acc = float((forest.predict_batch(ds.X) == ds.y).mean())
    assert acc >= 0.95


def test_knn_examples():
    ds = synth_dataset(SynthSpec("moons2d", 60), seed=5)
    assert len(np.unique(ds.X, axis=0)) == len(ds)
    k1 = train_knn(ds, k=1)
    np.testing.assert_array_equal(k1.predict_batch(ds.X), ds.y)
    kn = train_knn(ds, k=len(ds))
    majority = np.argmax(np.bincount(ds.y))
    assert (kn.predict_batch(ds.X[:10]) == majority).all()


def test_knn_distance_tie_lower_row_index():
    rng = np.random.default_rng(11)
    schema = random_mixed_schema(rng, n_num=1, n_cat=0)
    lo, hi = schema.features[0].range
    X = np.array([[lo], [lo], [hi]])
    ds = Dataset(schema, X, np.array([1, 0, 0]))
    k1 = train_knn(ds, k=1)
    # both stored copies of `lo` are at distance 0; the first one wins
    assert k1.predict_batch(np.array([[lo]]))[0] == 1


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(13)
    ds = synth_dataset(SynthSpec("imbalanced_mixed", 120), seed=1)
    probe = random_rows(rng, ds.schema, 100)

    forest = train_forest(ds, ForestConfig(n_trees=5, seed=2))
    save_model(forest, tmp_path / "f.json")
    back = load_model(tmp_path / "f.json")
    np.testing.assert_array_equal(back.predict_batch(probe), forest.predict_batch(probe))

    knn = train_knn(ds, k=3)
    save_model(knn, tmp_path / "k.json")
    kback = load_model(tmp_path / "k.json")
    np.testing.assert_array_equal(kback.predict_batch(probe), knn.predict_batch(probe))


def test_load_model_malformed(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"type": "forest", "task": "classification"', encoding="utf-8")
    with pytest.raises(OracleError, match="malformed model file"):
        load_model(p)


def test_schema_mismatch_on_use():
    a = synth_dataset(SynthSpec("moons2d", 30), seed=1)
    b = synth_dataset(SynthSpec("imbalanced_mixed", 30), seed=1)
    model = train_forest(a, ForestConfig(n_trees=2, seed=0))
    with pytest.raises(OracleError, match="schema"):
        ensure_same_schema(model.schema, b.schema)


def test_precomputed_rows_and_synthetic_error():
    ds = synth_dataset(SynthSpec("moons2d", 40), seed=6)
    preds = (np.arange(40) % 2).astype(np.int64)
    oracle = PrecomputedOracle(ds, preds, "classification")
    np.testing.assert_array_equal(oracle.predict_batch(ds.X), preds)
    np.testing.assert_array_equal(oracle.predict_batch(ds.X[7]), [preds[7]])
    alien = ds.X[0].copy()
    alien[0] += 0.123456
    with pytest.raises(OracleError, match="cannot label synthetic instances"):
        oracle.predict_batch(alien.reshape(1, -1))


def test_subprocess_constant_stub():
    ds = synth_dataset(SynthSpec("moons2d", 12), seed=3)
    oracle = SubprocessOracle(stub_command("--mode constant --value 0"),
                              ds.schema, "classification")
    try:
        out = oracle.predict_batch(ds.X)
        np.testing.assert_array_equal(out, np.zeros(12, dtype=np.int64))
        # batch/loop equivalence across calls to a persistent child
        loop = np.concatenate([oracle.predict_batch(r.reshape(1, -1)) for r in ds.X])
        np.testing.assert_array_equal(out, loop)
    finally:
        oracle.close()


def test_subprocess_threshold_and_regress():
    ds = synth_dataset(SynthSpec("moons2d", 10), seed=8)
    oracle = SubprocessOracle(stub_command("--mode threshold --value 1.0"),
                              ds.schema, "classification")
    try:
        out = oracle.predict_batch(ds.X)
        want = (ds.X.sum(axis=1) > 1.0).astype(np.int64)
        np.testing.assert_array_equal(out, want)
    finally:
        oracle.close()

    reg = SubprocessOracle(stub_command("--mode regress"), ds.schema, "regression")
    try:
        np.testing.assert_allclose(reg.predict_batch(ds.X), ds.X.sum(axis=1), atol=1e-9)
    finally:
        reg.close()


def test_subprocess_child_death_is_oracle_error():
    ds = synth_dataset(SynthSpec("moons2d", 6), seed=1)
    oracle = SubprocessOracle(stub_command("--mode constant --die-after 1"),
                              ds.schema, "classification")
    try:
        oracle.predict_batch(ds.X)  # first batch is answered
        with pytest.raises(OracleError, match="oracle subprocess"):
            oracle.predict_batch(ds.X)
    finally:
        oracle.close()


def test_subprocess_timeout():
    ds = synth_dataset(SynthSpec("moons2d", 4), seed=1)
    oracle = SubprocessOracle(stub_command("--mode constant --delay 5"),
                              ds.schema, "classification", timeout=0.3)
    try:
        with pytest.raises(OracleError, match="timed out"):
            oracle.predict_batch(ds.X)
    finally:
        oracle.close()


def test_subprocess_malformed_reply():
    ds = synth_dataset(SynthSpec("moons2d", 4), seed=1)
    oracle = SubprocessOracle(stub_command("--mode garbage"), ds.schema, "classification")
    try:
        with pytest.raises(OracleError, match="malformed oracle reply"):
            oracle.predict_batch(ds.X)
    finally:
        oracle.close()


def test_subprocess_unknown_command():
    ds = synth_dataset(SynthSpec("moons2d", 4), seed=1)
    oracle = SubprocessOracle("/no/such/binary-xyz", ds.schema, "classification")
    with pytest.raises(OracleError, match="cannot start"):
        oracle.predict_batch(ds.X)


def test_builtin_oracle_determinism():
    rng = np.random.default_rng(17)
    ds = make_dataset(rng, random_mixed_schema(rng, n_num=2, n_cat=1), 50)
    oracle = BuiltinOracle(train_forest(ds, ForestConfig(n_trees=5, seed=1)))
    probe = random_rows(rng, ds.schema, 30)
    np.testing.assert_array_equal(oracle.predict_batch(probe), oracle.predict_batch(probe))


def test_missing_targets_rejected():
    ds = synth_dataset(SynthSpec("moons2d", 20), seed=1)
    bare = Dataset(ds.schema, ds.X, None)
    with pytest.raises(ValueError, match="targets"):
        train_forest(bare)
    with pytest.raises(ValueError, match="targets"):
        train_knn(bare)
