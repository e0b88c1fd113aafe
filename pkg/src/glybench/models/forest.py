"""Random forest of depth-limited variance-reduction regression trees.

Split search is exhaustive over midpoints of sorted unique feature
values, vectorized across all features at once. Trees are grown on
bootstrap samples drawn from a seeded generator, so two fits with the
same data and seed produce bit-identical predictions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..features import FeatureConfig, from_log
from ..records import FeatureRow
from .base import FeaturePipeline, log_targets

MIN_LEAF = 2


@dataclass(frozen=True)
class _Leaf:
    value: float


@dataclass(frozen=True)
class _Split:
    feature: int
    threshold: float
    left: "_Node"
    right: "_Node"


_Node = Union[_Leaf, _Split]


def _best_split(x: np.ndarray, y: np.ndarray) -> Optional[tuple[int, float]]:
    """Feature index and midpoint threshold minimizing children's SSE.

    Considers every boundary between consecutive sorted values with at
    least MIN_LEAF rows on each side; returns None when no boundary
    separates distinct values. Ties resolve to the lowest flat index so
    the tree shape is reproducible.
    """
    n, f = x.shape
    if n < 2 * MIN_LEAF:
        return None
    order = np.argsort(x, axis=0)
    xs = np.take_along_axis(x, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1]
    left_n = np.arange(1, n, dtype=float)[:, None]
    left_sum = csum[:-1]
    right_sum = total - left_sum
    # maximizing sum²/count on both sides == minimizing total child SSE
    score = left_sum**2 / left_n + right_sum**2 / (n - left_n)
    score[~(xs[:-1] < xs[1:])] = -np.inf
    score[: MIN_LEAF - 1, :] = -np.inf
    if MIN_LEAF > 1:
        score[n - MIN_LEAF :, :] = -np.inf
    flat = int(np.argmax(score))
    pos, feat = divmod(flat, f)
    if score[pos, feat] == -np.inf:
        return None
    threshold = float((xs[pos, feat] + xs[pos + 1, feat]) / 2.0)
    return feat, threshold


def _grow(x: np.ndarray, y: np.ndarray, depth: int, max_depth: int) -> _Node:
    if depth >= max_depth or len(y) < 2 * MIN_LEAF or np.ptp(y) == 0.0:
        return _Leaf(float(y.mean()))
    split = _best_split(x, y)
    if split is None:
        return _Leaf(float(y.mean()))
    feat, threshold = split
    mask = x[:, feat] <= threshold
    return _Split(
        feature=feat,
        threshold=threshold,
        left=_grow(x[mask], y[mask], depth + 1, max_depth),
        right=_grow(x[~mask], y[~mask], depth + 1, max_depth),
    )


def _eval_tree(node: _Node, z: np.ndarray) -> float:
    while isinstance(node, _Split):
        node = node.left if z[node.feature] <= node.threshold else node.right
    return node.value


def tree_depth(node: _Node) -> int:
    if isinstance(node, _Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


class RegressionTree:
    """Single variance-reduction tree; exposed for direct use in tests."""

    def __init__(self, max_depth: int = 4):
        self.max_depth = max_depth
        self.root: Optional[_Node] = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> None:
        self.root = _grow(np.asarray(x, float), np.asarray(y, float), 0, self.max_depth)

    def predict(self, z: np.ndarray) -> float:
        if self.root is None:
            raise ValueError("tree not fitted")
        return _eval_tree(self.root, np.asarray(z, float))

    def depth(self) -> int:
        if self.root is None:
            raise ValueError("tree not fitted")
        return tree_depth(self.root)


class RandomForestPredictor:
    """Bootstrap ensemble of depth-limited trees on log targets."""

    def __init__(
        self,
        cfg: FeatureConfig,
        with_stacked: bool = False,
        max_depth: int = 4,
        n_trees: int = 100,
        seed: int = 0,
    ):
        self.max_depth = max_depth
        self.n_trees = n_trees
        self.seed = seed
        self.pipeline = FeaturePipeline(cfg, with_stacked)
        self.trees: list[_Node] = []

    def fit(self, train: Sequence[FeatureRow]) -> None:
        if len(train) < 2:
            raise ValueError("random forest needs at least two training rows")
        z = self.pipeline.fit(train)
        y = log_targets(train)
        rng = np.random.default_rng(self.seed)
        n = len(y)
        self.trees = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, n, size=n)
            self.trees.append(_grow(z[idx], y[idx], 0, self.max_depth))

    def predict(self, x: FeatureRow) -> float:
        if not self.trees:
            raise ValueError("predictor not fitted")
        q = self.pipeline.transform(x)
        return from_log(float(np.mean([_eval_tree(t, q) for t in self.trees])))

    def predict_many(self, rows: Sequence[FeatureRow]) -> list[float]:
        if not self.trees:
            raise ValueError("predictor not fitted")
        z = self.pipeline.transform_rows(rows)
        return [
            from_log(float(np.mean([_eval_tree(t, q) for t in self.trees])))
            for q in z
        ]

    def depths(self) -> list[int]:
        return [tree_depth(t) for t in self.trees]
