from __future__ import annotations

import numpy as np
import pytest

from glybench.features import FeatureConfig
from glybench.models import RandomForestPredictor, RegressionTree

from test_models import frow

CFG = FeatureConfig()


def _random_rows(seed: int, n: int):
    rng = np.random.default_rng(seed)
    return [
        frow(
            bg=float(rng.uniform(3, 15)),
            cho_prev=float(rng.uniform(0, 90)),
            bolus_prev=float(rng.uniform(0, 10)),
            dt_cho=float(rng.uniform(20, 500)),
            horizon_dt=float(rng.uniform(60, 600)),
            target_bg=float(rng.uniform(2, 20)),
        )
        for _ in range(n)
    ]


def test_constant_targets_give_constant_prediction():
    rows = [frow(bg=float(b), target_bg=7.5) for b in range(4, 14)]
    m = RandomForestPredictor(CFG, n_trees=10, seed=1)
    m.fit(rows)
    assert m.predict(frow(bg=9.0)) == pytest.approx(7.5, abs=1e-9)


def test_every_tree_respects_the_depth_bound():
    m = RandomForestPredictor(CFG, max_depth=4, n_trees=25, seed=3)
    m.fit(_random_rows(3, 60))
    assert m.depths()
    assert all(d <= 4 for d in m.depths())


def test_single_tree_splits_two_clusters_exactly():
    x = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([1.0, 1.0, 3.0, 3.0])
    tree = RegressionTree(max_depth=4)
    tree.fit(x, y)
    assert tree.depth() == 1
    assert tree.predict(np.array([0.0])) == 1.0
    assert tree.predict(np.array([1.0])) == 3.0


def test_tree_without_valid_split_is_a_leaf():
    x = np.array([[1.0], [1.0], [1.0], [1.0]])
    y = np.array([1.0, 2.0, 3.0, 4.0])
    tree = RegressionTree(max_depth=4)
    tree.fit(x, y)
    assert tree.depth() == 0
    assert tree.predict(np.array([1.0])) == pytest.approx(2.5)


def test_tree_split_uses_midpoint_threshold():
    x = np.array([[0.0], [0.0], [4.0], [4.0]])
    y = np.array([1.0, 1.0, 5.0, 5.0])
    tree = RegressionTree(max_depth=1)
    tree.fit(x, y)
    assert tree.root.threshold == 2.0


def test_min_leaf_size_is_respected():
    # 3 rows cannot produce a 1-row leaf under a 2-row minimum
    x = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1.0, 2.0, 9.0])
    tree = RegressionTree(max_depth=4)
    tree.fit(x, y)
    assert tree.depth() == 0


def test_same_seed_is_bit_identical():
    rows = _random_rows(11, 40)
    queries = _random_rows(12, 5)
    a = RandomForestPredictor(CFG, n_trees=20, seed=42)
    b = RandomForestPredictor(CFG, n_trees=20, seed=42)
    a.fit(rows)
    b.fit(rows)
    for q in queries:
        assert a.predict(q) == b.predict(q)


def test_different_seed_changes_the_forest():
    rows = _random_rows(11, 40)
    a = RandomForestPredictor(CFG, n_trees=20, seed=1)
    b = RandomForestPredictor(CFG, n_trees=20, seed=2)
    a.fit(rows)
    b.fit(rows)
    q = _random_rows(13, 1)[0]
    assert a.predict(q) != b.predict(q)


def test_forest_needs_two_rows():
    with pytest.raises(ValueError):
        RandomForestPredictor(CFG).fit([frow()])
