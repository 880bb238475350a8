import numpy as np
import pytest

import oracles
from gaitline.classify import Dataset, dumps_model, loads_model
from gaitline.classify.svm import BinarySvm, SvmModel, dual_objective, smo_binary, svm_predict, svm_train
from gaitline.errors import ConvergenceError, DataError


def toy(rng, n=20, spread=0.1):
    a = np.column_stack([rng.uniform(-1 - spread, -1 + spread, n), rng.uniform(-spread, spread, n)])
    b = np.column_stack([rng.uniform(1 - spread, 1 + spread, n), rng.uniform(-spread, spread, n)])
    return np.vstack([a, b]), np.array([0] * n + [1] * n)


def overlapping(rng, n=30):
    x = np.vstack([rng.normal([-0.6, 0.2], 0.7, size=(n, 2)), rng.normal([0.6, -0.2], 0.7, size=(n, 2))])
    return x, np.array([1.0] * n + [-1.0] * n)


class TestSeparable:
    def test_training_accuracy_and_boundary(self, rng):
        x, y = toy(rng)
        model = svm_train(Dataset(x, y, ("neutral", "anger")))
        assert np.all(model.predict(x) == y)
        m = model.pairs[0]
        # boundary crosses the x1 axis between the clusters
        cross = -m.b / m.w[0]
        assert -0.9 < cross < 0.9
        for row, label in zip(x, y):
            assert svm_predict(model, row) == label

    def test_feasibility_and_monotone_objective(self, rng):
        x, y = toy(rng)
        ys = np.where(y == 0, 1.0, -1.0)
        for C in (0.1, 1.0, 10.0):
            alpha, b, info = smo_binary(x, ys, C, tol=1e-3)
            assert np.all(alpha >= 0) and np.all(alpha <= C)
            assert abs(alpha @ ys) <= 1e-3
            hist = np.array(info["objective_history"])
            assert np.all(np.diff(hist) >= -1e-12)
            assert info["gap"] <= 1e-3


class TestPrimalOracle:
    @pytest.mark.parametrize("C", [0.5, 2.0])
    def test_matches_grid_search(self, rng, C):
        x, y = overlapping(rng)
        alpha, b, info = smo_binary(x, y, C, tol=1e-6)
        w = (alpha * y) @ x
        primal = oracles.svm_primal(w, b, x.tolist(), y.tolist(), C)
        dual = dual_objective(alpha, y, x)
        # weak duality, and a tight gap at convergence
        assert dual <= primal + 1e-9
        assert primal - dual <= 1e-3 * max(1.0, primal)
        grid_val, grid_wb = oracles.svm_grid_minimum(x.tolist(), y.tolist(), C, [0.0, 0.0, 0.0], 3.0)
        assert primal <= grid_val * (1 + 1e-6)
        assert grid_val - primal <= 1e-3 * primal
        np.testing.assert_allclose([*w, b], grid_wb, atol=0.05)

    def test_objective_history_reaches_dual_value(self, rng):
        x, y = overlapping(rng, 60)
        alpha, _, info = smo_binary(x, y, 1.0, tol=1e-4)
        assert info["objective_history"][-1] == pytest.approx(dual_objective(alpha, y, x), rel=1e-9)
        assert len(info["objective_history"]) >= 2


class TestDegenerate:
    def test_identical_classes(self, rng):
        x = rng.normal(size=(30, 3))
        data = Dataset(np.vstack([x, x]), np.array([0] * 30 + [1] * 30), ("neutral", "anger"))
        model = svm_train(data)
        assert np.linalg.norm(model.pairs[0].w) < 1e-6
        assert np.mean(model.predict(data.features) == data.labels) == pytest.approx(0.5)

    def test_single_class(self, rng):
        with pytest.raises(DataError, match="two classes"):
            svm_train(Dataset(rng.normal(size=(5, 2)), np.zeros(5), ("neutral", "anger")))

    def test_non_convergence_reported(self, rng):
        x, y = overlapping(rng, 200)
        with pytest.raises(ConvergenceError, match="did not converge"):
            smo_binary(x, y, 100.0, tol=1e-9, max_passes=1)


class TestVoting:
    def test_zero_decision_goes_to_positive(self):
        m = SvmModel(("neutral", "anger"), (BinarySvm(0, 1, np.array([1.0, 0.0]), 0.0, 1.0),))
        assert svm_predict(m, [0.0, 5.0]) == 0
        assert svm_predict(m, [-1e-300, 5.0]) == 1

    def test_three_way_tie_goes_to_lowest(self):
        # pair (0,1) votes 0, (0,2) votes 2, (1,2) votes 1
        pairs = (
            BinarySvm(0, 1, np.array([1.0]), 0.0, 1.0),
            BinarySvm(0, 2, np.array([-1.0]), 0.0, 1.0),
            BinarySvm(1, 2, np.array([1.0]), 0.0, 1.0),
        )
        m = SvmModel(("neutral", "anger", "happy"), pairs)
        assert m.votes([[1.0]]).tolist() == [[1, 1, 1]]
        assert svm_predict(m, [1.0]) == 0

    def test_three_class(self, rng):
        centers = np.array([[0, 3], [3, 0], [-3, -3]])
        x = np.vstack([c + rng.normal(0, 0.3, size=(15, 2)) for c in centers])
        y = np.repeat([0, 1, 2], 15)
        model = svm_train(Dataset(x, y, ("neutral", "anger", "happy")))
        assert len(model.pairs) == 3
        assert [(p.positive, p.negative) for p in model.pairs] == [(0, 1), (0, 2), (1, 2)]
        assert np.all(model.predict(x) == y)

    def test_orthogonal_shift_invariance(self, rng):
        x = rng.normal(size=(60, 3))
        y = (x[:, 0] + x[:, 1] > 0).astype(int)
        model = svm_train(Dataset(x[:, :2], y, ("neutral", "anger")))
        w = model.pairs[0].w
        ortho = np.array([-w[1], w[0]])
        shifted = x[:, :2] + rng.normal(size=(60, 1)) * ortho
        assert np.array_equal(model.predict(shifted), model.predict(x[:, :2]))

    def test_dimension_mismatch(self, rng):
        x, y = toy(rng)
        model = svm_train(Dataset(x, y, ("neutral", "anger")))
        with pytest.raises(DataError):
            model.predict(np.zeros((1, 3)))


class TestScaling:
    def test_folded_scaling_equals_scaled_problem(self, rng):
        x, y = toy(rng)
        x = x * [100.0, 0.01] + [5.0, -3.0]
        data = Dataset(x, y, ("neutral", "anger"))
        model = svm_train(data, normalize=True)
        lo, span = x.min(axis=0), x.max(axis=0) - x.min(axis=0)
        ys = np.where(y == 0, 1.0, -1.0)
        alpha, b, _ = smo_binary((x - lo) / span, ys)
        expected = ((x - lo) / span) @ ((alpha * ys) @ ((x - lo) / span)) + b
        np.testing.assert_allclose(model.pairs[0].decision(x), expected, rtol=1e-9, atol=1e-9)

    def test_round_trip_bit_exact(self, rng):
        x, y = toy(rng)
        model = svm_train(Dataset(x, y, ("neutral", "anger")))
        back = loads_model(dumps_model(model))
        assert np.array_equal(back.pairs[0].w, model.pairs[0].w)
        assert back.pairs[0].b == model.pairs[0].b
        assert dumps_model(back) == dumps_model(model)
