"""Pure-numpy regression-tree growth (exact greedy splits).

Reference implementation for the compiled kernel: both produce
bit-identical trees. The contract that makes that possible:

  * per-node sorted order = stable sort by (feature value, original row)
  * prefix sums and node totals are sequential left-to-right additions
  * gain = SL^2/nL + SR^2/nR - S^2/n, first strictly-greater candidate
    wins, features scanned in ascending order
  * threshold = midpoint of the adjacent sorted values, snapped to the
    left value when rounding would reach the right one
  * children partition preserves original row order; nodes are emitted
    preorder (node, left subtree, right subtree)
"""

from __future__ import annotations

import numpy as np

IMPL_NAME = "numpy"


def _seq_sum(v: np.ndarray) -> float:
    # np.cumsum accumulates sequentially; np.sum would pairwise-reduce
    return float(np.cumsum(v)[-1]) if len(v) else 0.0


def _best_split(X: np.ndarray, r: np.ndarray, idx: np.ndarray, min_leaf: int,
                total: float):
    n = len(idx)
    base = total * total / n
    best_gain = -np.inf
    best = None  # (feature, threshold, n_left)
    for j in range(X.shape[1]):
        x = X[idx, j]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        prefix = np.cumsum(r[idx][order])
        i = np.arange(min_leaf - 1, n - min_leaf)
        if len(i) == 0:
            continue
        valid = xs[i] != xs[i + 1]
        i = i[valid]
        if len(i) == 0:
            continue
        cnt = (i + 1).astype(np.float64)
        pl = prefix[i]
        gains = pl * pl / cnt + (total - pl) * (total - pl) / (n - cnt) - base
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            pos = int(i[k])
            a, b = float(xs[pos]), float(xs[pos + 1])
            thr = 0.5 * (a + b)
            if thr >= b:
                thr = a
            best_gain = float(gains[k])
            best = (j, thr, pos + 1)
    if best is None or best_gain <= 0.0:
        return None
    return best


def grow_tree(X: np.ndarray, r: np.ndarray, max_depth: int, min_leaf: int):
    """Fit one least-squares regression tree to residuals r.

    Returns (feature, threshold, left, right, value) arrays; feature is -1
    at leaves and left/right are -1 there.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def build(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        n = len(idx)
        total = _seq_sum(r[idx])
        value.append(total / n)
        if depth >= max_depth or n < 2 * min_leaf:
            return node
        found = _best_split(X, r, idx, min_leaf, total)
        if found is None:
            return node
        j, thr, _ = found
        mask = X[idx, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = build(idx[mask], depth + 1)
        right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(len(r), dtype=np.int64), 0)
    return (
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(value, dtype=np.float64),
    )
