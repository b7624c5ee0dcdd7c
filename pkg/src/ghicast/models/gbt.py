"""Gradient-boosted regression trees (squared loss, exact greedy splits).

Stage-wise boosting: the model starts at the training-target mean and each
round fits one depth-limited tree to the current residuals, added with a
shrinkage factor. Split search runs in the compiled kernel when available
(see ghicast._core); the numpy fallback grows identical trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _core
from ..errors import ParameterError


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = 120
    max_depth: int = 3
    shrinkage: float = 0.1
    min_leaf: int = 20

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ParameterError("max_depth must be >= 1")
        if self.n_trees < 0:
            raise ParameterError("n_trees must be >= 0")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ParameterError("shrinkage must be in (0, 1]")
        if self.min_leaf < 1:
            raise ParameterError("min_leaf must be >= 1")


def tree_predict(tree, x: np.ndarray) -> np.ndarray:
    feature, threshold, left, right, value = tree
    x = np.asarray(x, dtype=np.float64)
    cur = np.zeros(len(x), dtype=np.int64)
    while True:
        f = feature[cur]
        internal = f >= 0
        if not internal.any():
            break
        rows = np.nonzero(internal)[0]
        nodes = cur[rows]
        go_left = x[rows, feature[nodes]] <= threshold[nodes]
        cur[rows] = np.where(go_left, left[nodes], right[nodes])
    return value[cur]


@dataclass
class GbtModel:
    base: float
    shrinkage: float
    params: GbtParams
    trees: list = field(default_factory=list)
    key: tuple | None = None  # (site_id, issue_hour_of_day, horizon)

    def __post_init__(self) -> None:
        if len(self.trees) > self.params.n_trees:
            raise ParameterError("tree count exceeds the configured maximum")
        for tree in self.trees:
            if not np.all(np.isfinite(tree[4])):
                raise ParameterError("tree holds non-finite leaf values")

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, x: np.ndarray, n_trees: int | None = None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        k = self.n_trees if n_trees is None else n_trees
        if not 0 <= k <= self.n_trees:
            raise ParameterError(f"n_trees {k} outside 0..{self.n_trees}")
        out = np.full(len(x), self.base)
        for tree in self.trees[:k]:
            out += self.shrinkage * tree_predict(tree, x)
        return out

    def staged_predict(self, x: np.ndarray):
        """Predictions after 0, 1, ..., n_trees rounds."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.full(len(x), self.base)
        yield out.copy()
        for tree in self.trees:
            out += self.shrinkage * tree_predict(tree, x)
            yield out.copy()


def fit_gbt(x: np.ndarray, y: np.ndarray, params: GbtParams, key: tuple | None = None) -> GbtModel:
    """Fit one scalar-target boosted ensemble; requires >= 2*min_leaf samples."""
    x = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if len(x) != len(y):
        raise ParameterError("design matrix and target shapes do not match")
    if len(y) < 2 * params.min_leaf:
        raise ParameterError(f"need at least {2 * params.min_leaf} samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterError("non-finite training values")

    base = float(np.cumsum(y)[-1] / len(y))
    pred = np.full(len(y), base)
    trees = []
    for _ in range(params.n_trees):
        tree = _core.grow_tree(x, y - pred, params.max_depth, params.min_leaf)
        pred += params.shrinkage * tree_predict(tree, x)
        trees.append(tree)
    return GbtModel(base=base, shrinkage=params.shrinkage, params=params, trees=trees, key=key)
