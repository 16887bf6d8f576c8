"""Mixed-type distances for neighborhood selection.

Gower: the mean over features of per-feature dissimilarities; numeric features
contribute the absolute difference normalized by the schema range (values
clamped into the range first, constant features contribute 0), categorical
features contribute 0/1 mismatch. Always in [0, 1].

EuclideanNormalized: Euclidean distance over range-normalized numerics with
one-hot categoricals, divided by sqrt(feature count). One-hot entries are
scaled by 1/sqrt(2) so a categorical mismatch adds exactly 1 to the squared
sum, which keeps the result in [0, 1].
"""

from __future__ import annotations

import numpy as np

from .tabular import Schema, validate_instance

GOWER = "gower"
EUCLIDEAN = "euclidean"


class DistanceMetric:
    """A distance function bound to a schema; kind is 'gower' or 'euclidean'."""

    def __init__(self, schema: Schema, kind: str = GOWER):
        if kind not in (GOWER, EUCLIDEAN):
            raise ValueError(f"unknown metric kind {kind!r}")
        self.schema = schema
        self.kind = kind
        self._numeric = schema.numeric_mask()
        lo, hi = schema.numeric_bounds()
        self._lo = lo[self._numeric]
        self._hi = hi[self._numeric]
        span = self._hi - self._lo
        self._span = np.where(span > 0, span, 1.0)  # constant features divide by 1
        self._live = span > 0  # constant numeric features contribute 0


def _clamped_numeric(metric: DistanceMetric, X: np.ndarray) -> np.ndarray:
    return np.clip(X[..., metric._numeric], metric._lo, metric._hi)


def distances_to(metric: DistanceMetric, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Distances from x to every row, order preserved.

    Rows are trusted (dataset-internal); x is validated by callers at pipeline
    entry points. Vectorized over rows.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        return np.empty(0)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    x = np.asarray(x, dtype=float)
    p = metric.schema.n_features
    xn = _clamped_numeric(metric, x)
    rn = _clamped_numeric(metric, rows)
    num_diff = np.abs(rn - xn) / metric._span * metric._live
    cat_diff = rows[:, ~metric._numeric] != x[~metric._numeric]
    if metric.kind == GOWER:
        return (num_diff.sum(axis=1) + cat_diff.sum(axis=1)) / p
    # euclidean over the normalized encoding
    sq = (num_diff**2).sum(axis=1) + cat_diff.sum(axis=1)
    return np.sqrt(sq) / np.sqrt(p)


def distance(metric: DistanceMetric, a: np.ndarray, b: np.ndarray) -> float:
    """Distance between two conforming instances (validated)."""
    validate_instance(metric.schema, a)
    validate_instance(metric.schema, b)
    return float(distances_to(metric, np.asarray(a, dtype=float),
                              np.asarray(b, dtype=float).reshape(1, -1))[0])
