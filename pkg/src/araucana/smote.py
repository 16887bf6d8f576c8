"""SMOTE-NC oversampling for mixed numeric/categorical rows.

Synthetic samples interpolate a seed row with one of its k nearest same-class
neighbors: numeric features move a uniform fraction lambda along the segment,
categorical features take the majority value among the seed's k nearest
same-class neighbors (ties to the lowest category index).

Neighbor search uses Euclidean distance over range-normalized numerics; each
mismatched categorical pair adds (m/2)^2 to the squared distance, where m is
the median of the per-class standard deviations of the normalized numeric
features. With no numeric features the per-mismatch term is 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .tabular import CLASSIFICATION, Schema

BALANCE = "balance"
FIXED = "fixed"


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_policy: str = BALANCE
    fixed_total: int | None = None  # per-class total under the 'fixed' policy
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.target_policy not in (BALANCE, FIXED):
            raise ValueError(f"unknown target policy {self.target_policy!r}")
        if self.target_policy == FIXED and (self.fixed_total is None or self.fixed_total < 0):
            raise ValueError("'fixed' policy requires a non-negative fixed_total")


def _normalized_numeric(X: np.ndarray, schema: Schema) -> np.ndarray:
    mask = schema.numeric_mask()
    lo, hi = schema.numeric_bounds()
    lo, hi = lo[mask], hi[mask]
    span = np.where(hi > lo, hi - lo, 1.0)
    return (np.clip(X[:, mask], lo, hi) - lo) / span


def _mismatch_penalty(norm_num: np.ndarray) -> float:
    """Squared distance added per mismatched categorical pair."""
    if norm_num.shape[1] == 0:
        return 1.0
    med = float(np.median(norm_num.std(axis=0)))
    return (med / 2.0) ** 2


def _class_neighbor_order(X: np.ndarray, schema: Schema, members: np.ndarray) -> np.ndarray:
    """For each member row, all other members ordered by SMOTE-NC distance.

    Returns an (m, m-1) array of positions into `members`; ties break toward
    the lower original row index (members are in ascending index order).
    """
    sub = X[members]
    norm = _normalized_numeric(sub, schema)
    penalty = _mismatch_penalty(norm)
    cat = sub[:, ~schema.numeric_mask()]
    m = len(members)
    d2 = ((norm[:, None, :] - norm[None, :, :]) ** 2).sum(axis=2)
    d2 += penalty * (cat[:, None, :] != cat[None, :, :]).sum(axis=2)
    order = np.argsort(d2, axis=1, kind="stable")
    # drop self from each row's ordering; duplicates at distance 0 with a lower
    # index legitimately precede self, so self is not always column 0
    keep = order != np.arange(m)[:, None]
    return order[keep].reshape(m, m - 1) if m > 1 else order[:, :0]


def nearest_same_class(rows: np.ndarray, labels: np.ndarray, index: int, k: int,
                       schema: Schema) -> list[int]:
    """Indices of the k same-class rows nearest rows[index] (self excluded)."""
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels)
    members = np.flatnonzero(labels == labels[index])
    if len(members) < 2:
        raise ValueError(f"row {index} has no same-class peer")
    order = _class_neighbor_order(rows, schema, members)
    pos = int(np.searchsorted(members, index))
    k = min(k, len(members) - 1)
    return [int(members[j]) for j in order[pos, :k]]


def smote_nc(rows: np.ndarray, labels: np.ndarray, schema: Schema,
             cfg: SmoteConfig) -> tuple[np.ndarray, np.ndarray]:
    """Generate synthetic minority samples; returns (rows, labels) of the
    synthetic points only. Deterministic for a fixed cfg.seed.
    """
    if schema.target is not None and schema.target.kind != CLASSIFICATION:
        raise ValueError("smote_nc is defined for classification labels only")
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels)
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("smote_nc requires integer class labels, not regression targets")
    if len(rows) != len(labels):
        raise ValueError("rows and labels length mismatch")
    rng = np.random.default_rng(cfg.seed)
    classes, counts = np.unique(labels, return_counts=True)
    majority = int(counts.max()) if len(counts) else 0

    out_rows: list[np.ndarray] = []
    out_labels: list[int] = []
    num_mask = schema.numeric_mask()
    for cls, count in zip(classes, counts):
        target = majority if cfg.target_policy == BALANCE else int(cfg.fixed_total)
        need = target - int(count)
        if need <= 0:
            continue
        if count < 2:
            warnings.warn(
                f"class {int(cls)} has {int(count)} row(s); skipping oversampling",
                stacklevel=2,
            )
            continue
        k = cfg.k_neighbors
        if k >= count:
            k = int(count) - 1
            warnings.warn(
                f"class {int(cls)}: k_neighbors reduced to {k} (class size {int(count)})",
                stacklevel=2,
            )
        members = np.flatnonzero(labels == cls)
        order = _class_neighbor_order(rows, schema, members)
        for _ in range(need):
            si = int(rng.integers(len(members)))
            neigh = order[si, :k]
            nj = int(neigh[rng.integers(len(neigh))])
            seed_row = rows[members[si]]
            nbr_row = rows[members[nj]]
            lam = rng.random()
            new = seed_row.copy()
            new[num_mask] = seed_row[num_mask] + lam * (nbr_row[num_mask] - seed_row[num_mask])
            for j in np.flatnonzero(~num_mask):
                vals = rows[members[neigh], j].astype(np.int64)
                new[j] = np.argmax(np.bincount(vals))  # first max = lowest category index
            out_rows.append(new)
            out_labels.append(int(cls))

    if not out_rows:
        return np.empty((0, schema.n_features)), np.empty(0, dtype=np.int64)
    return np.array(out_rows), np.array(out_labels, dtype=np.int64)
