from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gaitline.classify import Dataset, LearnerConfig, dumps_model, loads_model, train
from gaitline.classify.forest import ForestModel, forest_predict, forest_train, oob_accuracy
from gaitline.classify.tree import LEAF, TreeModel, best_split, gini, grow_tree, tree_predict, tree_train
from gaitline.errors import DataError

TWO = ("neutral", "anger")


def xor_data():
    pts = np.array(list(product([0.0, 1.0], repeat=2)))
    x = np.repeat(pts, 5, axis=0)
    y = (pts[:, 0] != pts[:, 1]).astype(int).repeat(5)
    return x, y


class TestGini:
    def test_values(self):
        assert gini([5, 0]) == 0.0
        assert gini([2, 2]) == 0.5
        assert gini([1, 1, 1]) == pytest.approx(2 / 3)
        assert gini([0, 0]) == 0.0


class TestTree:
    def test_pure_data_is_a_leaf(self, rng):
        t = tree_train(Dataset(rng.normal(size=(10, 3)), np.ones(10), TWO))
        assert t.n_nodes == 1 and t.feature[0] == LEAF
        assert t.counts[0].tolist() == [0, 10]
        assert tree_predict(t, [0, 0, 0]) == 1

    def test_threshold_split(self, rng):
        x = np.concatenate([rng.uniform(-2, -0.5, 20), rng.uniform(0.5, 2, 20)])
        y = (x > 0).astype(int)
        t = tree_train(Dataset(x[:, None], y, TWO))
        assert t.depth == 1
        assert -0.5 < t.threshold[0] < 0.5
        assert np.all(t.predict(x[:, None]) == y)

    def test_xor_needs_depth_two(self):
        x, y = xor_data()
        # every depth-1 tree misclassifies at least half the rows
        stumps = [
            np.mean(np.where(x[:, f] <= thr, a, b) == y)
            for f in range(2)
            for thr in np.unique(x[:, f])
            for a in (0, 1)
            for b in (0, 1)
        ]
        assert max(stumps) <= 0.5 + 1e-12
        t = tree_train(Dataset(x, y, TWO))
        assert t.depth == 2
        assert np.all(t.predict(x) == y)

    def test_depth_and_leaf_limits(self, rng):
        x = rng.normal(size=(200, 4))
        y = rng.integers(0, 2, 200)
        assert tree_train(Dataset(x, y, TWO), max_depth=3).depth <= 3
        t = tree_train(Dataset(x, y, TWO), min_leaf=7)
        leaves = t.feature == LEAF
        assert t.counts[leaves].sum(axis=1).min() >= 7

    def test_structure_invariants(self, rng):
        x = rng.normal(size=(150, 5))
        y = rng.integers(0, 3, 150)
        t = tree_train(Dataset(x, y, ("neutral", "anger", "happy")))
        inner = np.flatnonzero(t.feature != LEAF)
        assert np.all(t.left[inner] != LEAF) and np.all(t.right[inner] != LEAF)
        for node in inner:
            assert np.array_equal(t.counts[node], t.counts[t.left[node]] + t.counts[t.right[node]])
        assert t.counts[t.feature == LEAF].sum() == 150

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**31), m=st.integers(4, 60), d=st.integers(1, 4), k=st.integers(2, 3))
    def test_best_split_is_optimal(self, seed, m, d, k):
        r = np.random.default_rng(seed)
        x = r.integers(0, 6, size=(m, d)).astype(float)
        y = r.integers(0, k, m)
        found = best_split(x, y, k, range(d), min_leaf=1)
        expected = oracles.best_gain(x.tolist(), y.tolist(), k)
        if expected is None:
            assert found is None
        else:
            assert found[2] == pytest.approx(expected, abs=1e-12)
            f, thr, _ = found
            assert np.any(x[:, f] <= thr) and np.any(x[:, f] > thr)

    def test_tie_prefers_first_feature(self):
        x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 0, 1])
        assert best_split(x, y, 2, [0, 1])[0] == 0
        assert best_split(x, y, 2, [1, 0])[0] == 1

    def test_round_trip(self, rng):
        x = rng.normal(size=(60, 3))
        t = tree_train(Dataset(x, (x[:, 0] > 0).astype(int), TWO))
        back = TreeModel.from_dict(t.to_dict())
        assert np.array_equal(back.threshold, t.threshold)
        assert dumps_model(loads_model(dumps_model(t))) == dumps_model(t)

    def test_empty(self):
        with pytest.raises(DataError):
            grow_tree(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), TWO)


def separable(rng, n=40):
    x = np.vstack([rng.normal(-2, 0.5, size=(n, 3)), rng.normal(2, 0.5, size=(n, 3))])
    return Dataset(x, np.repeat([0, 1], n), TWO)


class TestForest:
    def test_deterministic(self, rng):
        data = separable(rng)
        a = forest_train(data, 10, seed=5)
        b = forest_train(data, 10, seed=5)
        assert dumps_model(a) == dumps_model(b)
        assert dumps_model(forest_train(data, 10, seed=6)) != dumps_model(a)

    def test_independent_of_threads(self, rng):
        data = Dataset(rng.normal(size=(80, 6)), rng.integers(0, 2, 80), TWO)
        assert dumps_model(forest_train(data, 12, seed=1, n_jobs=1)) == dumps_model(
            forest_train(data, 12, seed=1, n_jobs=4)
        )

    def test_oob_on_separable(self, rng):
        data = separable(rng)
        assert oob_accuracy(forest_train(data, 25, seed=0), data) >= 0.95

    def test_single_tree_without_bootstrap_is_plain_tree(self, rng):
        data = Dataset(rng.normal(size=(90, 4)), rng.integers(0, 3, 90), ("neutral", "anger", "happy"))
        forest = forest_train(data, 1, mtry=4, seed=3, bootstrap=False)
        plain = tree_train(data)
        assert forest.trees[0].to_dict() == plain.to_dict()
        assert np.array_equal(forest.predict(data.features), plain.predict(data.features))

    def test_random_tree_learner(self, rng):
        data = separable(rng)
        model = train(LearnerConfig(kind="rtree", seed=2), data)
        assert isinstance(model, ForestModel) and len(model.trees) == 1
        assert forest_predict(model, data.features[0]) == tree_predict(model.trees[0], data.features[0])

    def test_vote_tie_goes_to_lowest(self, rng):
        data = separable(rng)
        t0 = tree_train(Dataset(data.features, np.zeros(80, dtype=int), TWO))
        t1 = tree_train(Dataset(data.features, np.ones(80, dtype=int), TWO))
        forest = ForestModel(TWO, (t1, t0), 1, 0)
        assert forest.votes(data.features[:1]).tolist() == [[1, 1]]
        assert forest_predict(forest, data.features[0]) == 0

    def test_mtry_range(self, rng):
        with pytest.raises(DataError):
            forest_train(separable(rng), 2, mtry=4)

    def test_oob_requires_bootstrap(self, rng):
        data = separable(rng)
        with pytest.raises(DataError):
            oob_accuracy(forest_train(data, 2, bootstrap=False), data)
