"""CART decision trees and a bagging ensemble.

Trees are stored as flat node arrays (pre-order, left child first). A node
with ``feature == -1`` is a leaf; otherwise samples with
``x[feature] <= threshold`` go left.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _cart
from .errors import CompatibilityError, DataError, ParameterError
from .features import FEATURE_DIGEST

N_CLASSES = 2
MODEL_FORMAT = "emvote-bagging"
MODEL_VERSION = 1
# split scores closer than this count as tied (then lowest feature, lowest threshold)
TIE_TOL = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 2
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ParameterError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ParameterError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ParameterError("max_depth must be >= 0 or None")


def gini(class_counts) -> float:
    """``1 - sum(p_i^2)`` of a class-count vector."""
    c = np.asarray(class_counts, dtype=float)
    if np.any(c < 0):
        raise DataError("class counts must be non-negative")
    total = c.sum()
    if total <= 0:
        raise DataError("gini of an empty node is undefined")
    p = c / total
    return float(1.0 - np.sum(p * p))


@dataclass
class Tree:
    feature: np.ndarray      # int, -1 for leaves
    threshold: np.ndarray    # float
    left: np.ndarray         # int child index, -1 for leaves
    right: np.ndarray
    counts: np.ndarray       # (n_nodes, N_CLASSES) int
    n_features: int

    @property
    def n_nodes(self):
        return len(self.feature)

    def leaf_index(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active[r] = self.feature[node[r]] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        """Majority class of the reached leaf; ties go to class 0."""
        c = self.counts[self.leaf_index(X)]
        return (c[:, 1] > c[:, 0]).astype(np.int64)

    def to_nested(self, i: int = 0) -> dict:
        if self.feature[i] < 0:
            return {"counts": [int(v) for v in self.counts[i]]}
        return {"feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                "left": self.to_nested(int(self.left[i])),
                "right": self.to_nested(int(self.right[i]))}

    @classmethod
    def from_nested(cls, root: dict, n_features: int) -> "Tree":
        feat, thr, left, right, counts = [], [], [], [], []

        def visit(node):
            i = len(feat)
            feat.append(-1)
            thr.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append([0] * N_CLASSES)
            if "counts" in node:
                if len(node["counts"]) != N_CLASSES:
                    raise CompatibilityError("leaf counts have the wrong arity")
                counts[i] = [int(v) for v in node["counts"]]
                return i, counts[i]
            f = int(node["feature"])
            if not 0 <= f < n_features:
                raise CompatibilityError(f"split feature {f} out of range")
            feat[i] = f
            thr[i] = float(node["threshold"])
            li, lc = visit(node["left"])
            ri, rc = visit(node["right"])
            left[i], right[i] = li, ri
            counts[i] = [a + b for a, b in zip(lc, rc)]
            return i, counts[i]

        visit(root)
        return cls(np.array(feat, dtype=np.int64), np.array(thr, dtype=float),
                   np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                   np.array(counts, dtype=np.int64), n_features)


def best_split(X, y, min_samples_leaf: int = 1):
    """Root split CART would choose for ``(X, y)``.

    Returns ``(feature, threshold)`` or None when the node stays a leaf.
    """
    root = train_tree(X, y, TrainConfig(n_trees=1, max_depth=1, min_samples_leaf=min_samples_leaf))
    if root.feature[0] < 0:
        return None
    return int(root.feature[0]), float(root.threshold[0])


def train_tree(X, y, cfg: TrainConfig = TrainConfig()) -> Tree:
    """Grow one CART tree on the full sample set ``(X, y)``.

    Each node takes the (feature, threshold) minimising size-weighted Gini
    impurity, thresholds being midpoints between consecutive distinct
    values. Growth stops on a pure node, at ``max_depth``, or when no
    split leaves ``min_samples_leaf`` samples per side.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0:
        raise DataError("training set is empty")
    if len(X) != len(y):
        raise DataError(f"{len(X)} vectors but {len(y)} labels")
    if np.any((y < 0) | (y >= N_CLASSES)):
        raise DataError("labels must be 0 or 1")
    if not np.all(np.isfinite(X)):
        raise DataError("feature values must be finite")
    n, n_feat = X.shape
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    size = 2 * n
    feat = np.empty(size, dtype=np.int64)
    thr = np.empty(size, dtype=float)
    left = np.empty(size, dtype=np.int64)
    right = np.empty(size, dtype=np.int64)
    counts = np.empty((size, N_CLASSES), dtype=np.int64)
    depth = -1 if cfg.max_depth is None else int(cfg.max_depth)
    k = _cart.grow(np.ascontiguousarray(X.T), y, order, int(cfg.min_samples_leaf), depth, TIE_TOL,
                   feat, thr, left, right, counts)
    return Tree(feat[:k].copy(), thr[:k].copy(), left[:k].copy(), right[:k].copy(),
                counts[:k].copy(), n_feat)


def stable_subseed(seed: int, tree_index: int) -> int:
    """Platform-independent 64-bit sub-seed for one tree."""
    h = hashlib.blake2b(f"{int(seed)}:{int(tree_index)}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def bootstrap_indices(n: int, seed: int, tree_index: int) -> np.ndarray:
    rng = np.random.default_rng(stable_subseed(seed, tree_index))
    return rng.integers(0, n, size=n)


@dataclass
class BaggingModel:
    trees: list
    seed: int
    config: TrainConfig
    feature_order_digest: str = FEATURE_DIGEST
    feature_names: list = field(default_factory=list)
    pipeline: dict = field(default_factory=dict)     # windowing/sensor settings echo

    @property
    def n_trees(self):
        return len(self.trees)

    @property
    def n_features(self):
        return self.trees[0].n_features

    def check_layout(self, digest):
        if digest is not None and digest != self.feature_order_digest:
            raise CompatibilityError("feature layout digest does not match the model")

    def tree_votes(self, X) -> np.ndarray:
        """``(n_samples, n_trees)`` matrix of per-tree class votes."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise CompatibilityError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return np.stack([t.predict(X) for t in self.trees], axis=1)

    def predict_scores(self, X, digest=None) -> np.ndarray:
        """Fraction of trees voting class 1, per row."""
        self.check_layout(digest)
        votes = self.tree_votes(X)
        return votes.sum(axis=1) / votes.shape[1]

    def predict_batch(self, X, digest=None):
        scores = self.predict_scores(X, digest)
        return (scores > 0.5).astype(np.int64), scores


def _train_one(X, y, cfg, seed, t):
    if cfg.bootstrap:
        b = bootstrap_indices(len(X), seed, t)
        return train_tree(X[b], y[b], cfg)
    return train_tree(X, y, cfg)


def train_bagging(X, y, cfg: TrainConfig = TrainConfig(), seed: int = 0,
                  feature_names=None, jobs: int = 1) -> BaggingModel:
    """Bag ``cfg.n_trees`` CART trees; tree ``t`` sees a bootstrap drawn from ``stable_subseed(seed, t)``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0:
        raise DataError("training set is empty")
    if len(X) != len(y):
        raise DataError(f"{len(X)} vectors but {len(y)} labels")
    if jobs > 1 and cfg.n_trees > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(_train_one, *zip(*[(X, y, cfg, seed, t) for t in range(cfg.n_trees)])))
    else:
        trees = [_train_one(X, y, cfg, seed, t) for t in range(cfg.n_trees)]
    if feature_names is None:
        from .features import FEATURE_NAMES
        feature_names = list(FEATURE_NAMES) if X.shape[1] == len(FEATURE_NAMES) else []
    from .features import layout_digest
    digest = layout_digest(feature_names) if feature_names else FEATURE_DIGEST
    return BaggingModel(trees, int(seed), cfg, digest, list(feature_names))


def predict(model: BaggingModel, v, digest=None):
    """``(class, score)`` for one vector; score is the fraction of trees voting 1.

    Class 1 needs a strict majority of trees; an even split gives class 0.
    """
    cls, score = model.predict_batch(np.asarray(v, dtype=float)[None, :], digest)
    return int(cls[0]), float(score[0])


def model_to_dict(model: BaggingModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "seed": model.seed,
        "config": asdict(model.config),
        "feature_order_digest": model.feature_order_digest,
        "feature_names": list(model.feature_names),
        "n_features": model.n_features,
        "pipeline": dict(model.pipeline),
        "trees": [t.to_nested() for t in model.trees],
    }


def dumps(model: BaggingModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> BaggingModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CompatibilityError(f"model file is not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise CompatibilityError("not an emvote model file")
    if doc.get("version") != MODEL_VERSION:
        raise CompatibilityError(f"unsupported model version {doc.get('version')!r}")
    try:
        names = list(doc["feature_names"])
        digest = doc["feature_order_digest"]
        if names:
            from .features import layout_digest
            if layout_digest(names) != digest:
                raise CompatibilityError("feature names do not match the stored digest")
        n_features = int(doc["n_features"])
        cfg = TrainConfig(**doc["config"])
        trees = [Tree.from_nested(t, n_features) for t in doc["trees"]]
        if len(trees) != cfg.n_trees:
            raise CompatibilityError(f"expected {cfg.n_trees} trees, found {len(trees)}")
        return BaggingModel(trees, int(doc["seed"]), cfg, digest, names,
                            dict(doc.get("pipeline", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise CompatibilityError(f"malformed model file ({exc})") from None


def save(model: BaggingModel, sink) -> None:
    """Write JSON to a path or a text stream."""
    text = dumps(model)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w") as fh:
            fh.write(text)


def load(source) -> BaggingModel:
    if hasattr(source, "read"):
        return loads(source.read())
    with open(source) as fh:
        return loads(fh.read())
