"""Random forest over TF-IDF features: bagged Gini decision trees.

Each tree grows on a bootstrap sample, examining a fresh random feature
subset (square root of the dictionary size by default) at every split and
splitting on the threshold that minimizes weighted Gini impurity.  Trees are
grown to purity unless depth or leaf-size limits say otherwise, and the whole
ensemble is a pure function of the training data and the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError, TrainingError
from ..taxonomy import CategoryCode
from .features import FeatureVector, design_matrix


@dataclass
class TreeNode:
    """Interior node (feature, threshold, children) or leaf (klass set)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    klass: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.klass >= 0


@dataclass
class Forest:
    trees: list[TreeNode]
    classes: tuple[CategoryCode, ...]
    num_trees: int
    seed: int
    bootstrap: bool
    feature_subsample: str | None
    max_depth: int | None
    min_samples_leaf: int


def _gini_best_split(
    X: np.ndarray, y: np.ndarray, rows: np.ndarray, features: np.ndarray, n_classes: int,
    min_samples_leaf: int,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity) over the candidate features."""
    best = None
    n = len(rows)
    y_rows = y[rows]
    for f in features:
        values = X[rows, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y_rows[order]
        # Prefix class counts ahead of each boundary between distinct values.
        boundaries = np.nonzero(sv[1:] > sv[:-1])[0] + 1
        if not len(boundaries):
            continue
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), sy] = 1
        prefix = np.cumsum(onehot, axis=0)
        total = prefix[-1]
        for cut in boundaries:
            if cut < min_samples_leaf or n - cut < min_samples_leaf:
                continue
            left_counts = prefix[cut - 1]
            right_counts = total - left_counts
            nl = cut
            nr = n - cut
            gini_l = 1.0 - float((left_counts * left_counts).sum()) / (nl * nl)
            gini_r = 1.0 - float((right_counts * right_counts).sum()) / (nr * nr)
            impurity = (nl * gini_l + nr * gini_r) / n
            threshold = 0.5 * (sv[cut - 1] + sv[cut])
            if best is None or impurity < best[2] - 1e-12:
                best = (int(f), float(threshold), float(impurity))
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    rng: np.random.Generator,
    n_classes: int,
    n_features: int,
    subset_size: int | None,
    max_depth: int | None,
    min_samples_leaf: int,
    depth: int = 0,
) -> TreeNode:
    counts = np.bincount(y[rows], minlength=n_classes)
    majority = int(np.argmax(counts))  # ties: lowest class index = lowest code
    if (
        counts[majority] == len(rows)
        or (max_depth is not None and depth >= max_depth)
        or len(rows) < 2 * min_samples_leaf
    ):
        return TreeNode(klass=majority)
    if subset_size is None or subset_size >= n_features:
        features = np.arange(n_features)
    else:
        features = np.sort(rng.choice(n_features, size=subset_size, replace=False))
    split = _gini_best_split(X, y, rows, features, n_classes, min_samples_leaf)
    if split is None:
        return TreeNode(klass=majority)
    feature, threshold, _ = split
    mask = X[rows, feature] <= threshold
    left_rows = rows[mask]
    right_rows = rows[~mask]
    if not len(left_rows) or not len(right_rows):
        return TreeNode(klass=majority)
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=_grow(X, y, left_rows, rng, n_classes, n_features, subset_size, max_depth,
                   min_samples_leaf, depth + 1),
        right=_grow(X, y, right_rows, rng, n_classes, n_features, subset_size, max_depth,
                    min_samples_leaf, depth + 1),
    )


def train_forest(
    data: Sequence[tuple[FeatureVector, CategoryCode]],
    num_trees: int = 300,
    seed: int = 0,
    *,
    dim: int | None = None,
    bootstrap: bool = True,
    feature_subsample: str | None = "sqrt",
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
) -> Forest:
    if num_trees < 1:
        raise ConfigError(f"num_trees must be >= 1, got {num_trees}")
    if feature_subsample not in (None, "sqrt"):
        raise ConfigError(f"unknown feature_subsample {feature_subsample!r}")
    if not data:
        raise TrainingError("no training data")
    classes = tuple(sorted({code for _, code in data}))
    class_index = {code: i for i, code in enumerate(classes)}
    vectors = [fv for fv, _ in data]
    if dim is None:
        dim = 1 + max((int(fv.cols[-1]) for fv in vectors if fv.nnz), default=0)
    X = design_matrix(vectors, dim)
    y = np.array([class_index[code] for _, code in data], dtype=np.int64)
    n = len(y)
    subset_size = None
    if feature_subsample == "sqrt":
        subset_size = max(1, int(math.isqrt(dim)))
    seeds = np.random.SeedSequence(seed).spawn(num_trees)
    trees = []
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(
            _grow(X, y, np.asarray(rows), rng, len(classes), dim, subset_size,
                  max_depth, min_samples_leaf)
        )
    return Forest(
        trees=trees,
        classes=classes,
        num_trees=num_trees,
        seed=seed,
        bootstrap=bootstrap,
        feature_subsample=feature_subsample,
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
    )


def _walk(node: TreeNode, fv: FeatureVector) -> int:
    while not node.is_leaf:
        node = node.left if fv.get(node.feature) <= node.threshold else node.right
    return node.klass


def forest_predict(forest: Forest, x: FeatureVector) -> CategoryCode:
    """Plurality vote across trees; ties resolve to the lowest code."""
    votes = np.zeros(len(forest.classes), dtype=np.int64)
    for tree in forest.trees:
        votes[_walk(tree, x)] += 1
    return forest.classes[int(np.argmax(votes))]


def forest_predict_batch(forest: Forest, vectors: Sequence[FeatureVector]) -> list[CategoryCode]:
    return [forest_predict(forest, fv) for fv in vectors]
