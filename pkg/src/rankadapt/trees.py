"""Least-squares regression trees grown best-first to a fixed leaf budget."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

# relative slack when comparing split gains, so float noise cannot reorder ties
_GAIN_RTOL = 1e-12


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class Leaf:
    value: float


Node = Union[Split, Leaf]


class RegressionTree:
    """Binary tree over feature thresholds; ``x[f] <= threshold`` goes left.

    ``nodes[0]`` is the root. Child links are indices into ``nodes``.
    """

    def __init__(self, nodes, feature_count: Optional[int] = None):
        self.nodes: tuple[Node, ...] = tuple(nodes)
        if not self.nodes:
            raise ValueError("a tree needs at least one node")
        self.feature_count = feature_count
        n = len(self.nodes)
        self._feature = np.full(n, -1, dtype=np.int64)
        self._threshold = np.zeros(n)
        self._left = np.full(n, -1, dtype=np.int64)
        self._right = np.full(n, -1, dtype=np.int64)
        self._value = np.zeros(n)
        for i, node in enumerate(self.nodes):
            if isinstance(node, Split):
                if not (0 < node.left < n and 0 < node.right < n):
                    raise ValueError(f"node {i} has dangling children")
                self._feature[i] = node.feature_index
                self._threshold[i] = node.threshold
                self._left[i] = node.left
                self._right[i] = node.right
            else:
                self._value[i] = node.value

    @property
    def leaf_count(self) -> int:
        return sum(isinstance(n, Leaf) for n in self.nodes)

    def leaf_indices(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if isinstance(n, Leaf)]

    def apply(self, X) -> np.ndarray:
        """Index of the leaf node reached by each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.feature_count is not None and X.shape[1] != self.feature_count:
            raise ValueError(f"expected {self.feature_count} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self._left[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self._feature[cur]] <= self._threshold[cur]
            node[active] = np.where(go_left, self._left[cur], self._right[cur])
            active = active[self._left[node[active]] >= 0]
        return node

    def predict(self, X) -> np.ndarray:
        return self._value[self.apply(X)]

    def with_leaf_values(self, values: dict[int, float]) -> "RegressionTree":
        nodes = [Leaf(float(values[i])) if isinstance(n, Leaf) and i in values else n
                 for i, n in enumerate(self.nodes)]
        return RegressionTree(nodes, self.feature_count)

    def to_dict(self, index: int = 0) -> dict:
        node = self.nodes[index]
        if isinstance(node, Leaf):
            return {"value": node.value}
        return {"feature_index": node.feature_index, "threshold": node.threshold,
                "left": self.to_dict(node.left), "right": self.to_dict(node.right)}

    @classmethod
    def from_dict(cls, d: dict, feature_count: Optional[int] = None) -> "RegressionTree":
        nodes: list = []

        def build(rec) -> int:
            i = len(nodes)
            if "value" in rec:
                nodes.append(Leaf(float(rec["value"])))
                return i
            nodes.append(None)
            left = build(rec["left"])
            right = build(rec["right"])
            nodes[i] = Split(int(rec["feature_index"]), float(rec["threshold"]), left, right)
            return i

        build(d)
        return cls(nodes, feature_count)

    def __repr__(self):
        return f"RegressionTree(leaves={self.leaf_count})"


def tree_predict(tree: RegressionTree, features) -> float:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("tree_predict takes a single feature vector")
    if tree.feature_count is not None and x.size != tree.feature_count:
        raise ValueError(f"expected {tree.feature_count} features, got {x.size}")
    return float(tree.predict(x[None, :])[0])


def _midpoint(a: float, b: float) -> float:
    m = 0.5 * (a + b)
    # a and b adjacent floats: the midpoint can round up onto b
    return m if m < b else a


def best_split(X: np.ndarray, y: np.ndarray, features, min_samples_leaf: int = 1):
    """Best single threshold split of ``(X, y)`` by squared-error reduction.

    Candidates are midpoints between consecutive distinct values of each
    feature in ``features``. Scan order is feature order, then increasing
    threshold; the first candidate reaching the maximum wins.

    Returns ``(gain, feature, threshold)`` or None if no valid split exists.
    """
    n = y.size
    if n < 2 * min_samples_leaf:
        return None
    total = y.sum()
    base = total * total / n
    best = None
    best_gain = 0.0
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        csum = np.cumsum(ys)[:-1]
        n_left = np.arange(1, n)
        valid = xs[1:] > xs[:-1]
        valid &= (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
        if not valid.any():
            continue
        idx = np.flatnonzero(valid)
        nl = n_left[idx]
        sl = csum[idx]
        gains = sl * sl / nl + (total - sl) ** 2 / (n - nl) - base
        top = float(gains.max())
        j = int(np.argmax(gains >= top - _GAIN_RTOL * max(1.0, abs(top))))
        g = float(gains[j])
        if best is None or g > best_gain + _GAIN_RTOL * max(1.0, abs(best_gain)):
            cut = idx[j]
            best = (g, int(f), _midpoint(float(xs[cut]), float(xs[cut + 1])))
            best_gain = g
    # gains at float-noise level (e.g. constant targets) are not real splits
    if best is not None and best_gain <= _GAIN_RTOL * float(y @ y):
        return None
    return best


def fit_regression_tree(X, targets, max_leaves: int = 20, min_samples_leaf: int = 1,
                        sample_rate: Optional[float] = None,
                        rng: Optional[np.random.Generator] = None) -> RegressionTree:
    """Grow a squared-error regression tree best-first up to ``max_leaves`` leaves.

    The frontier leaf whose best split gives the largest error reduction is
    split next (ties go to the leaf created first). Leaves hold the mean
    target of their training rows.

    With ``sample_rate`` set, every node draws a fresh subsample of its rows
    and of the features (each at that rate, from ``rng``) and picks its split
    on that subsample only; the split is then applied to all of the node's rows.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit_regression_tree needs a non-empty 2-d sample matrix")
    if y.shape != (X.shape[0],):
        raise ValueError("targets length must equal the number of samples")
    if max_leaves < 1 or min_samples_leaf < 1:
        raise ValueError("max_leaves and min_samples_leaf must be >= 1")
    if sample_rate is not None:
        if not 0 < sample_rate <= 1:
            raise ValueError("sample_rate must be in (0, 1]")
        if rng is None:
            rng = np.random.default_rng(0)
    d = X.shape[1]
    all_features = np.arange(d)

    def candidate(rows: np.ndarray):
        if sample_rate is None:
            return best_split(X[rows], y[rows], all_features, min_samples_leaf)
        n_rows = max(1, int(round(sample_rate * rows.size)))
        n_feat = max(1, int(round(sample_rate * d)))
        sub = np.sort(rng.choice(rows.size, size=n_rows, replace=False))
        feats = np.sort(rng.choice(d, size=n_feat, replace=False))
        r = rows[sub]
        return best_split(X[r], y[r], feats, min_samples_leaf)

    nodes: list = [None]
    members = {0: np.arange(X.shape[0])}
    heap: list = []

    def push(node_id: int):
        found = candidate(members[node_id])
        if found is not None and found[0] > 0.0:
            heapq.heappush(heap, (-found[0], node_id, found[1], found[2]))

    push(0)
    leaves = 1
    while leaves < max_leaves and heap:
        _, node_id, f, thr = heapq.heappop(heap)
        rows = members.pop(node_id)
        go_left = X[rows, f] <= thr
        left_id, right_id = len(nodes), len(nodes) + 1
        nodes.extend([None, None])
        nodes[node_id] = Split(f, thr, left_id, right_id)
        members[left_id] = rows[go_left]
        members[right_id] = rows[~go_left]
        leaves += 1
        push(left_id)
        push(right_id)

    for node_id, rows in members.items():
        nodes[node_id] = Leaf(float(np.mean(y[rows])))
    return RegressionTree(nodes, d)
