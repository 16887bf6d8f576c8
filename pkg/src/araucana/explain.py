"""The local tree-explanation pipeline.

Given a training set, a query instance x, and a black-box oracle:

1. rank training rows by distance to x and keep the N nearest,
2. relabel them with the oracle's predictions (original targets are ignored),
3. oversample the relabeled neighborhood with SMOTE-NC and relabel the
   synthetic points with the oracle as well,
4. fit an unpruned CART tree on neighborhood + x + synthetics,
5. read the root-to-leaf path of x off the tree as an IF-THEN rule.

Because the tree is unpruned and x is part of its training set, the tree
reproduces the oracle's label for x exactly whenever no other row of the
explainer set carries x's exact feature vector with a different label.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import cart
from .gower import DistanceMetric, distances_to
from .oracle import PredictionOracle
from .smote import SmoteConfig, smote_nc
from .tabular import CLASSIFICATION, REGRESSION, Dataset, Schema, validate_instance

ORIGINAL = "original"
QUERY = "query"
SYNTHETIC = "synthetic"

TEXT = "text"
JSON = "json"

OP_LE = "<="
OP_GT = ">"
OP_EQ = "=="
OP_NE = "!="


@dataclass(frozen=True)
class ExplainConfig:
    n_neighbors: int = 100
    distance: str = "gower"
    smote: SmoteConfig | None = field(default_factory=SmoteConfig)  # None = off
    cart: cart.CartConfig = field(default_factory=cart.CartConfig)
    seed: int = 0
    regression_rel_eps: float = 1e-6
    regression_abs_eps: float = 1e-9

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")


@dataclass
class Neighborhood:
    """The N training rows nearest the query, with their oracle relabels."""

    indices: np.ndarray
    distances: np.ndarray  # non-decreasing
    rows: np.ndarray
    relabels: np.ndarray


@dataclass
class ExplainerSet:
    """Rows the surrogate tree is trained on: neighborhood, query, synthetics."""

    X: np.ndarray
    y: np.ndarray
    provenance: list[str]

    def __len__(self):
        return len(self.X)


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str
    value: object  # threshold for numerics, category string otherwise

    def holds(self, display_value) -> bool:
        if self.op == OP_LE:
            return float(display_value) <= self.value
        if self.op == OP_GT:
            return float(display_value) > self.value
        if self.op == OP_EQ:
            return display_value == self.value
        return display_value != self.value


@dataclass
class Rule:
    """The query's root-to-leaf path as a conjunction of conditions.

    support counts explainer-set rows satisfying every condition; purity is
    the fraction of those rows whose label matches the prediction (within the
    regression epsilon for numeric targets).
    """

    conditions: list[Condition]
    prediction: object  # class name or regression value
    support: int
    purity: float


@dataclass
class Explanation:
    query: np.ndarray
    oracle_label: object  # encoded label (class index or float)
    rule: Rule
    tree: cart.ExplainerTree
    tree_stats: dict
    faithful: bool
    neighborhood: dict
    config: dict
    seed: int
    explainer_set: ExplainerSet | None = None  # kept for inspection, not serialized


def select_neighborhood(train: Dataset, x: np.ndarray, oracle: PredictionOracle,
                        cfg: ExplainConfig) -> Neighborhood:
    """The N training rows with lowest distance to x (ties: lower row index),
    relabeled by the oracle."""
    x = np.asarray(x, dtype=float)
    validate_instance(train.schema, x)
    n = cfg.n_neighbors
    if n > len(train):
        warnings.warn(
            f"n_neighbors={n} exceeds the training size {len(train)}; clamping",
            stacklevel=2,
        )
        n = len(train)
    metric = DistanceMetric(train.schema, cfg.distance)
    d = distances_to(metric, x, train.X)
    order = np.argsort(d, kind="stable")[:n]
    rows = train.X[order]
    relabels = oracle.predict_batch(rows)
    return Neighborhood(order, d[order], rows, relabels)


def build_explainer_set(nbh: Neighborhood, x: np.ndarray, oracle: PredictionOracle,
                        smote_cfg: SmoteConfig | None, schema: Schema) -> ExplainerSet:
    """Neighborhood rows + query + oracle-relabeled SMOTE synthetics."""
    x = np.asarray(x, dtype=float)
    x_label = oracle.predict_batch(x.reshape(1, -1))[0]
    parts_X = [nbh.rows, x.reshape(1, -1)]
    parts_y = [np.asarray(nbh.relabels), np.asarray([x_label])]
    provenance = [ORIGINAL] * len(nbh.rows) + [QUERY]
    if smote_cfg is not None:
        syn_X, _ = smote_nc(nbh.rows, nbh.relabels, schema, smote_cfg)
        if len(syn_X):
            syn_y = oracle.predict_batch(syn_X)  # oracle labels replace seed labels
            parts_X.append(syn_X)
            parts_y.append(syn_y)
            provenance += [SYNTHETIC] * len(syn_X)
    return ExplainerSet(np.vstack(parts_X), np.concatenate(parts_y), provenance)


def _merge_path(path, schema: Schema) -> list[Condition]:
    """Decision-path tests as conditions, numeric tests merged per feature into
    the tightest interval, emitted at each feature's first appearance."""
    numeric_first: dict[int, int] = {}
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    slots: list = []
    for feat, kind, value, taken in path:
        name = schema.features[feat].name
        if kind == cart.NUMERIC_LE:
            if feat not in numeric_first:
                numeric_first[feat] = len(slots)
                slots.append(("interval", feat, name))
            if taken:
                upper[feat] = min(upper.get(feat, np.inf), value)
            else:
                lower[feat] = max(lower.get(feat, -np.inf), value)
        else:
            category = schema.features[feat].categories[int(value)]
            slots.append(("cat", Condition(name, OP_EQ if taken else OP_NE, category)))
    out: list[Condition] = []
    for slot in slots:
        if slot[0] == "cat":
            out.append(slot[1])
        else:
            _, feat, name = slot
            if feat in lower:
                out.append(Condition(name, OP_GT, lower[feat]))
            if feat in upper:
                out.append(Condition(name, OP_LE, upper[feat]))
    return out


def _rule_support(conditions: list[Condition], eset: ExplainerSet, schema: Schema,
                  prediction_encoded, task: str, eps: float) -> tuple[int, float]:
    decoded = [schema.decode_row(r) for r in eset.X]
    name_to_pos = {f.name: i for i, f in enumerate(schema.features)}
    match = np.ones(len(eset), dtype=bool)
    for c in conditions:
        pos = name_to_pos[c.feature]
        match &= np.array([c.holds(row[pos]) for row in decoded])
    support = int(match.sum())
    if support == 0:
        return 0, 0.0
    labels = eset.y[match]
    if task == CLASSIFICATION:
        agree = int((labels == prediction_encoded).sum())
    else:
        agree = int((np.abs(labels - prediction_encoded) <= eps).sum())
    return support, agree / support


def explain_instance(train: Dataset, x: np.ndarray, oracle: PredictionOracle,
                     cfg: ExplainConfig = ExplainConfig()) -> Explanation:
    """Run the full pipeline for one query instance."""
    x = np.asarray(x, dtype=float)
    validate_instance(train.schema, x)
    schema = train.schema
    task = oracle.task

    smote_cfg = cfg.smote
    smote_off_reason = None
    if task == REGRESSION and smote_cfg is not None:
        # class-based oversampling is undefined for numeric targets
        smote_cfg = None
        smote_off_reason = "regression task"

    nbh = select_neighborhood(train, x, oracle, cfg)
    eset = build_explainer_set(nbh, x, oracle, smote_cfg, schema)
    oracle_label = eset.y[eset.provenance.index(QUERY)]

    tree = cart.fit_tree(eset.X, eset.y, schema, cfg.cart, task=task)
    path = cart.decision_path(tree, x)
    conditions = _merge_path(path, schema)

    pred_encoded = cart.predict_tree(tree, x)
    if task == CLASSIFICATION:
        faithful = bool(pred_encoded == oracle_label)
        eps = 0.0
    else:
        eps = cfg.regression_rel_eps * abs(float(oracle_label)) + cfg.regression_abs_eps
        faithful = bool(abs(float(pred_encoded) - float(oracle_label)) <= eps)
    support, purity = _rule_support(conditions, eset, schema, pred_encoded, task, eps)
    rule = Rule(conditions, schema.decode_label(pred_encoded), support, purity)

    if task == CLASSIFICATION:
        relabel_counts: dict = {}
        for v in nbh.relabels:
            key = str(schema.decode_label(v))
            relabel_counts[key] = relabel_counts.get(key, 0) + 1
    else:
        vals = np.asarray(nbh.relabels, dtype=float)
        relabel_counts = {
            "min": float(vals.min()),
            "mean": float(vals.mean()),
            "max": float(vals.max()),
        }
    smote_echo = "off" if smote_cfg is None else {
        "policy": smote_cfg.target_policy,
        "k_neighbors": smote_cfg.k_neighbors,
        **({"fixed_total": smote_cfg.fixed_total} if smote_cfg.fixed_total is not None else {}),
    }
    if smote_off_reason:
        smote_echo = f"off ({smote_off_reason})"
    config_echo = {
        "n_neighbors": int(len(nbh.rows)),
        "distance": cfg.distance,
        "smote": smote_echo,
        "cart": {
            "criterion": cfg.cart.criterion if task == CLASSIFICATION else cart.MSE,
            "min_samples_split": cfg.cart.min_samples_split,
            "max_depth": cfg.cart.max_depth,
        },
        "task": task,
    }
    if task == REGRESSION:
        config_echo["regression_epsilon"] = eps
    return Explanation(
        query=x,
        oracle_label=oracle_label,
        rule=rule,
        tree=tree,
        tree_stats=cart.tree_stats(tree),
        faithful=faithful,
        neighborhood={
            "size": int(len(nbh.rows)),
            "max_distance": float(nbh.distances[-1]) if len(nbh.distances) else 0.0,
            "relabel_counts": relabel_counts,
        },
        config=config_echo,
        seed=cfg.seed,
        explainer_set=eset,
    )


def _format_value(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def render_explanation(expl: Explanation, format: str = TEXT) -> bytes:
    """Stable text or JSON rendering of an explanation."""
    schema = expl.tree.schema
    if format == JSON:
        doc = {
            "query": schema.decode_row(expl.query),
            "oracle_label": schema.decode_label(expl.oracle_label),
            "rule": {
                "conditions": [
                    {"feature": c.feature, "op": c.op, "value": c.value}
                    for c in expl.rule.conditions
                ],
                "prediction": expl.rule.prediction,
                "support": expl.rule.support,
                "purity": expl.rule.purity,
            },
            "tree": cart.tree_to_dict(expl.tree),
            "tree_stats": expl.tree_stats,
            "faithful": expl.faithful,
            "config": expl.config,
            "seed": expl.seed,
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if format != TEXT:
        raise ValueError(f"unknown render format {format!r}")
    if expl.rule.conditions:
        cond = " AND ".join(
            f"{c.feature} {c.op} {_format_value(c.value)}" for c in expl.rule.conditions
        )
    else:
        cond = "(always)"
    lines = [
        f"IF {cond} THEN {expl.rule.prediction} "
        f"(support={expl.rule.support}, purity={expl.rule.purity:.3f}, "
        f"faithful={str(expl.faithful).lower()})",
        f"oracle label: {schema.decode_label(expl.oracle_label)}",
        f"tree: depth={expl.tree_stats['depth']} leaves={expl.tree_stats['leaf_count']} "
        f"nodes={expl.tree_stats['node_count']}",
        f"neighborhood: size={expl.neighborhood['size']} "
        f"max_distance={expl.neighborhood['max_distance']:.4f} "
        f"relabels={expl.neighborhood['relabel_counts']}",
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")
