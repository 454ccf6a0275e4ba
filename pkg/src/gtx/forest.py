"""Bagged decision-tree ensemble over fixed-length categorical strings.

Splits test equality of one position against one symbol, chosen by Gini
impurity over a random subset of positions, trees trained on bootstrap
resamples.  Kept self-contained so the models being explained carry no
dependency baggage; trees are flat numpy arrays and prediction walks all
rows in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SingleClassError(ValueError):
    """Training data with only one label leaves nothing to learn."""


@dataclass(frozen=True)
class ForestConfig:
    num_trees: int = 100
    max_features: int | str = "sqrt"  # positions considered per split
    min_samples_leaf: int = 2
    max_depth: int | None = None

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be positive")
        if isinstance(self.max_features, str) and self.max_features != "sqrt":
            raise ValueError("max_features is an int or 'sqrt'")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive")

    def resolve_max_features(self, num_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, round(math.sqrt(num_features)))
        return max(1, min(int(self.max_features), num_features))


@dataclass(frozen=True)
class _Tree:
    feature: np.ndarray  # int32, -1 at leaves
    symbol: np.ndarray  # int8, split glyph code
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    prob: np.ndarray  # float64, positive fraction at the node
    depth: int


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[_Tree, ...]
    num_features: int
    alphabet_size: int
    config: ForestConfig
    seed: int

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Probability of the positive class for each row of X."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.num_features:
            raise ValueError(f"expected rows of {self.num_features} features")
        n = X.shape[0]
        if n == 0:
            return np.zeros(0)
        rows = np.arange(n)
        acc = np.zeros(n)
        for tree in self.trees:
            idx = np.zeros(n, dtype=np.int32)
            for _ in range(tree.depth):
                feat = tree.feature[idx]
                internal = feat >= 0
                if not internal.any():
                    break
                lookup = np.where(internal, feat, 0)
                go_left = X[rows, lookup] == tree.symbol[idx]
                stepped = np.where(go_left, tree.left[idx], tree.right[idx])
                idx = np.where(internal, stepped, idx)
            acc += tree.prob[idx]
        return acc / len(self.trees)

    def predict_proba(self, x: np.ndarray) -> float:
        return float(self.predict_batch(np.asarray(x).reshape(1, -1))[0])

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.predict_batch(X)


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    alphabet_size: int,
    cfg: ForestConfig,
    rng: np.random.Generator,
) -> _Tree:
    n_total, num_features = X.shape
    k = cfg.resolve_max_features(num_features)
    min_leaf = cfg.min_samples_leaf
    boot = rng.integers(0, n_total, n_total)

    feature: list[int] = []
    symbol: list[int] = []
    left: list[int] = []
    right: list[int] = []
    prob: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        symbol.append(0)
        left.append(-1)
        right.append(-1)
        prob.append(0.0)
        return len(feature) - 1

    max_depth_seen = 0
    stack = [(new_node(), boot, 0)]
    while stack:
        nid, rows, depth = stack.pop()
        max_depth_seen = max(max_depth_seen, depth)
        ys = y[rows]
        n = len(rows)
        npos = int(ys.sum())
        prob[nid] = npos / n
        if npos in (0, n) or n < 2 * min_leaf:
            continue
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue

        feats = rng.choice(num_features, size=k, replace=False)
        sub = X[rows][:, feats].astype(np.int32)
        # one histogram over (feature slot, symbol, label) in a single pass
        codes = sub * 2 + ys[:, None] + np.arange(k)[None, :] * (2 * alphabet_size)
        hist = np.bincount(codes.ravel(), minlength=2 * alphabet_size * k)
        hist = hist.reshape(k, alphabet_size, 2)
        left_n = hist.sum(axis=2)
        left_p = hist[:, :, 1]
        right_n = n - left_n
        right_p = npos - left_p

        def side_cost(cnt, pos):  # n * gini = 2 p (n - p) / n
            return np.where(cnt > 0, 2.0 * pos * (cnt - pos) / np.maximum(cnt, 1), 0.0)

        cost = side_cost(left_n, left_p) + side_cost(right_n, right_p)
        parent_cost = 2.0 * npos * (n - npos) / n
        valid = (left_n >= min_leaf) & (right_n >= min_leaf)
        cost = np.where(valid, cost, np.inf)
        flat = int(np.argmin(cost))
        fi, sv = divmod(flat, alphabet_size)
        if not np.isfinite(cost[fi, sv]) or parent_cost - cost[fi, sv] <= 1e-12:
            continue  # nothing separates better than the node itself

        f = int(feats[fi])
        went_left = X[rows, f] == sv
        lid = new_node()
        rid = new_node()
        feature[nid] = f
        symbol[nid] = sv
        left[nid] = lid
        right[nid] = rid
        stack.append((rid, rows[~went_left], depth + 1))
        stack.append((lid, rows[went_left], depth + 1))

    return _Tree(
        feature=np.array(feature, dtype=np.int32),
        symbol=np.array(symbol, dtype=np.int8),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        prob=np.array(prob, dtype=np.float64),
        depth=max_depth_seen + 1,
    )


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    cfg: ForestConfig = ForestConfig(),
    seed: int = 0,
) -> ForestModel:
    """Fit the ensemble; deterministic in `seed`."""
    X = np.asarray(X, dtype=np.int8)
    y = np.asarray(y).astype(np.int8)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, l) with one label per row")
    if len(X) == 0:
        raise SingleClassError("empty training set")
    if int(y.min()) == int(y.max()):
        raise SingleClassError("training labels are all one class")
    alphabet_size = int(X.max()) + 1
    streams = np.random.SeedSequence(seed).spawn(cfg.num_trees)
    trees = tuple(
        _grow_tree(X, y, alphabet_size, cfg, np.random.default_rng(s))
        for s in streams)
    return ForestModel(
        trees=trees,
        num_features=X.shape[1],
        alphabet_size=alphabet_size,
        config=cfg,
        seed=seed,
    )
