"""The black-box prediction contract and its backends.

An oracle is a deterministic batch map from instances to labels. Three
backends: built-in reference models (random forest, k-NN), an external
subprocess speaking line-delimited JSON, and a precomputed prediction column
(original dataset rows only).

Subprocess wire protocol (one JSON object per line, both directions):
  request  {"instances": [[v, ...], ...]}   numerics as numbers, categoricals
                                            as category strings
  reply    {"predictions": [p, ...]}        class names as strings (or class
                                            indices as integers); numbers for
                                            regression
The child is spawned once and persists across batches; the default per-batch
timeout is 30 seconds.
"""

from __future__ import annotations

import json
import math
import os
import select
import shlex
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from . import cart
from .gower import DistanceMetric, distances_to
from .tabular import CLASSIFICATION, REGRESSION, Dataset, Schema


class OracleError(RuntimeError):
    """The black box failed: process death, protocol violation, bad labels."""


class PredictionOracle:
    """Base interface: schema, task, and a deterministic predict_batch."""

    def __init__(self, schema: Schema, task: str):
        self.schema = schema
        self.task = task

    def predict_batch(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass


def ensure_same_schema(a: Schema, b: Schema, what: str = "model") -> None:
    if a.to_dict() != b.to_dict():
        raise OracleError(f"{what} schema does not match the dataset schema")


# ---------------------------------------------------------------- built-in


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    seed: int = 0
    bootstrap: bool = True
    feature_subsample: int | None = None  # None = ceil(sqrt(n_features))
    max_depth: int | None = None


class ForestModel:
    """Bagged unpruned CART trees; majority vote / mean."""

    def __init__(self, trees, schema: Schema, task: str, tree_seeds, feature_subsample,
                 bootstrap=True):
        self.trees = trees
        self.schema = schema
        self.task = task
        self.n_trees = len(trees)
        self.tree_seeds = list(tree_seeds)
        self.feature_subsample = feature_subsample
        self.bootstrap = bootstrap

    def predict_batch(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        votes = np.stack([cart.predict_batch(t, rows) for t in self.trees])
        if self.task == REGRESSION:
            return votes.mean(axis=0)
        n_classes = len(self.schema.target.classes)
        counts = np.stack([(votes == c).sum(axis=0) for c in range(n_classes)])
        return counts.argmax(axis=0).astype(np.int64)  # vote ties: lowest class index


def train_forest(data: Dataset, cfg: ForestConfig = ForestConfig()) -> ForestModel:
    """Bootstrap-resampled trees with per-node feature subsampling."""
    if data.y is None:
        raise ValueError("training a forest requires a dataset with targets")
    p = data.schema.n_features
    sub = cfg.feature_subsample
    if sub is None:
        sub = max(1, math.ceil(math.sqrt(p)))
    sub = min(sub, p)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(2 * cfg.n_trees)
    trees = []
    n = len(data)
    for t in range(cfg.n_trees):
        if cfg.bootstrap:
            idx = np.random.default_rng(int(seeds[2 * t])).integers(0, n, size=n)
        else:
            idx = np.arange(n)
        tree_cfg = cart.CartConfig(
            criterion=cart.MSE if data.task == REGRESSION else cart.GINI,
            max_depth=cfg.max_depth,
            seed=int(seeds[2 * t + 1]),
            feature_subsample=sub if sub < p else None,
        )
        trees.append(cart.fit_tree(data.X[idx], data.y[idx], data.schema, tree_cfg,
                                   task=data.task))
    return ForestModel(trees, data.schema, data.task, seeds[::2], sub, cfg.bootstrap)


class KnnModel:
    """k nearest neighbors under a mixed-type metric; majority vote / mean."""

    def __init__(self, X, y, schema: Schema, task: str, k: int, metric: DistanceMetric):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y)
        self.schema = schema
        self.task = task
        self.k = k
        self.metric = metric

    def predict_batch(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        k = min(self.k, len(self.X))
        preds = []
        for x in rows:
            d = distances_to(self.metric, x, self.X)
            near = np.argsort(d, kind="stable")[:k]  # distance ties: lower row index
            if self.task == REGRESSION:
                preds.append(float(self.y[near].mean()))
            else:
                counts = np.bincount(self.y[near].astype(np.int64),
                                     minlength=len(self.schema.target.classes))
                preds.append(int(np.argmax(counts)))
        dtype = float if self.task == REGRESSION else np.int64
        return np.asarray(preds, dtype=dtype)


def train_knn(data: Dataset, k: int = 5, metric: DistanceMetric | None = None) -> KnnModel:
    if data.y is None:
        raise ValueError("training k-NN requires a dataset with targets")
    if metric is None:
        metric = DistanceMetric(data.schema)
    return KnnModel(data.X, data.y, data.schema, data.task, k, metric)


class BuiltinOracle(PredictionOracle):
    def __init__(self, model):
        super().__init__(model.schema, model.task)
        self.model = model

    def predict_batch(self, rows: np.ndarray) -> np.ndarray:
        return self.model.predict_batch(rows)


# ---------------------------------------------------------------- subprocess


class SubprocessOracle(PredictionOracle):
    """Black box behind a command line, speaking line-delimited JSON."""

    def __init__(self, command: str, schema: Schema, task: str, timeout: float = 30.0):
        super().__init__(schema, task)
        self.command = command
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._buf = b""

    def _ensure_child(self):
        if self._proc is not None and self._proc.poll() is None:
            return
        if self._proc is not None:
            raise OracleError(
                f"oracle subprocess exited with code {self._proc.returncode}"
            )
        argv = shlex.split(self.command)
        if not argv:
            raise OracleError("empty oracle command")
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
            )
        except OSError as exc:
            raise OracleError(f"cannot start oracle command {self.command!r}: {exc}") from exc

    def _read_line(self) -> bytes:
        """One newline-terminated reply, honoring the per-batch timeout."""
        deadline = time.monotonic() + self.timeout
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buf:
            remain = deadline - time.monotonic()
            if remain <= 0:
                raise OracleError(f"oracle timed out after {self.timeout}s")
            ready, _, _ = select.select([fd], [], [], remain)
            if not ready:
                raise OracleError(f"oracle timed out after {self.timeout}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                code = self._proc.poll()
                raise OracleError(
                    "oracle subprocess closed its output mid-run"
                    + (f" (exit code {code})" if code is not None else "")
                )
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def predict_batch(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        self._ensure_child()
        payload = {"instances": [self.schema.decode_row(r) for r in rows]}
        try:
            self._proc.stdin.write((json.dumps(payload) + "\n").encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise OracleError(f"oracle subprocess is gone: {exc}") from exc
        line = self._read_line()
        try:
            reply = json.loads(line)
            preds = reply["predictions"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise OracleError(f"malformed oracle reply {line[:200]!r}: {exc}") from exc
        if not isinstance(preds, list) or len(preds) != len(rows):
            raise OracleError(
                f"oracle replied {len(preds) if isinstance(preds, list) else 'non-list'} "
                f"predictions for {len(rows)} instances"
            )
        return self._decode_predictions(preds)

    def _decode_predictions(self, preds) -> np.ndarray:
        if self.task == REGRESSION:
            try:
                out = np.asarray([float(v) for v in preds])
            except (TypeError, ValueError) as exc:
                raise OracleError(f"non-numeric regression prediction: {exc}") from exc
            if not np.isfinite(out).all():
                raise OracleError("non-finite regression prediction")
            return out
        classes = self.schema.target.classes
        out = np.empty(len(preds), dtype=np.int64)
        for i, v in enumerate(preds):
            if isinstance(v, str):
                if v not in classes:
                    raise OracleError(f"unknown class {v!r} (known: {list(classes)})")
                out[i] = classes.index(v)
            elif isinstance(v, (int, np.integer)) or (isinstance(v, float) and v == int(v)):
                j = int(v)
                if not 0 <= j < len(classes):
                    raise OracleError(f"class index {j} out of range 0..{len(classes) - 1}")
                out[i] = j
            else:
                raise OracleError(f"prediction {v!r} is neither a class name nor an index")
        return out

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=2)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()


# --------------------------------------------------------------- precomputed


class PrecomputedOracle(PredictionOracle):
    """Looks up predictions recorded for the original dataset rows.

    Cannot label anything else: SMOTE-generated points have no recorded
    prediction, so runs using this backend must disable oversampling.
    """

    def __init__(self, data: Dataset, predictions: np.ndarray, task: str):
        super().__init__(data.schema, task)
        predictions = np.asarray(predictions)
        if len(predictions) != len(data):
            raise ValueError(f"{len(predictions)} predictions for {len(data)} rows")
        self._index: dict[bytes, int] = {}
        for i in range(len(data) - 1, -1, -1):  # first occurrence wins
            self._index[data.X[i].tobytes()] = i
        self.predictions = (
            predictions.astype(np.int64) if task == CLASSIFICATION else predictions.astype(float)
        )

    def predict_batch(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        out = []
        for x in rows:
            i = self._index.get(x.tobytes())
            if i is None:
                raise OracleError(
                    "precomputed oracle cannot label synthetic instances "
                    "(or any row outside its dataset); rerun with --smote-policy off"
                )
            out.append(self.predictions[i])
        dtype = np.int64 if self.task == CLASSIFICATION else float
        return np.asarray(out, dtype=dtype)


# -------------------------------------------------------------- persistence


def save_model(model, path) -> None:
    if isinstance(model, ForestModel):
        doc = {
            "type": "forest",
            "task": model.task,
            "schema": model.schema.to_dict(),
            "feature_subsample": model.feature_subsample,
            "bootstrap": model.bootstrap,
            "tree_seeds": [int(s) for s in model.tree_seeds],
            "trees": [cart.tree_to_dict(t) for t in model.trees],
        }
    elif isinstance(model, KnnModel):
        doc = {
            "type": "knn",
            "task": model.task,
            "schema": model.schema.to_dict(),
            "k": model.k,
            "metric": model.metric.kind,
            "rows": [model.schema.decode_row(r) for r in model.X],
            "labels": [model.schema.decode_label(v) for v in model.y],
        }
    else:
        raise TypeError(f"cannot save model of type {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        kind = doc["type"]
        schema = Schema.from_dict(doc["schema"])
        task = doc["task"]
        if kind == "forest":
            trees = [cart.tree_from_dict(d, schema, task) for d in doc["trees"]]
            return ForestModel(trees, schema, task, doc["tree_seeds"],
                               doc["feature_subsample"], doc.get("bootstrap", True))
        if kind == "knn":
            X = np.array([schema.encode_row(r) for r in doc["rows"]])
            y = np.array([schema.encode_label(v) for v in doc["labels"]])
            metric = DistanceMetric(schema, doc["metric"])
            return KnnModel(X, y, schema, task, doc["k"], metric)
        raise KeyError(f"unknown model type {kind!r}")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise OracleError(f"malformed model file {path}: {exc}") from exc
