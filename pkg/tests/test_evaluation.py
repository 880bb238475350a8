import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitline.classify import LearnerConfig
from gaitline.errors import DataError
from gaitline.evaluation import (
    ConfusionMatrix,
    EvalReport,
    FittedPipeline,
    accuracy,
    cross_validate,
    fit_pipeline,
    per_class_accuracy,
    stratified_kfold,
    subject_kfold,
)
from gaitline.features import FeatureMatrix

THREE = ("neutral", "anger", "happy")


def feature_matrix(values, labels, subjects=None):
    values = np.asarray(values, dtype=float)
    n, d = values.shape
    subjects = subjects or [f"s{i % 10}" for i in range(n)]
    return FeatureMatrix(values, labels, subjects, ["ankle"] * n, [f"f{i}" for i in range(d)])


class TestConfusion:
    def test_per_class(self):
        cm = ConfusionMatrix(THREE, [[136, 7, 32], [18, 151, 7], [43, 8, 115]])
        assert per_class_accuracy(cm)[0] == pytest.approx(136 / 175)
        assert accuracy(cm) == pytest.approx((136 + 151 + 115) / 517)

    def test_diagonal_and_zero(self):
        assert accuracy(ConfusionMatrix(THREE, np.diag([3, 4, 5]))) == 1.0
        assert accuracy(ConfusionMatrix(THREE, [[0, 1, 0], [2, 0, 0], [0, 3, 0]])) == 0.0

    def test_empty(self):
        with pytest.raises(DataError):
            accuracy(ConfusionMatrix(THREE, np.zeros((3, 3))))

    def test_from_predictions_and_add(self):
        a = ConfusionMatrix.from_predictions(THREE, [0, 1, 2, 2], [0, 2, 2, 1])
        assert a.counts.tolist() == [[1, 0, 0], [0, 0, 1], [0, 1, 1]]
        assert (a + a).total == 8

    def test_rejects_bad_shape(self):
        with pytest.raises(DataError):
            ConfusionMatrix(THREE, np.zeros((2, 2)))


class TestFolds:
    def test_exact_division(self):
        plan = stratified_kfold(np.repeat([0, 1], 10), 10, seed=0)
        for f in range(10):
            assert sorted(np.repeat([0, 1], 10)[plan.test_index(f)].tolist()) == [0, 1]

    def test_uneven(self):
        plan = stratified_kfold(np.zeros(21, dtype=int), 10, seed=1)
        sizes = np.bincount(plan.assignments, minlength=10)
        assert sorted(set(sizes.tolist())) == [2, 3]

    def test_deterministic(self):
        y = np.repeat([0, 1, 2], [13, 17, 25])
        a = stratified_kfold(y, 10, 4).assignments
        assert np.array_equal(a, stratified_kfold(y, 10, 4).assignments)
        assert not np.array_equal(a, stratified_kfold(y, 10, 5).assignments)

    def test_class_too_small(self):
        with pytest.raises(DataError, match="fewer than 10"):
            stratified_kfold(np.repeat([0, 1], [20, 9]), 10)

    @settings(max_examples=60, deadline=None)
    @given(counts=st.lists(st.integers(5, 60), min_size=2, max_size=3), k=st.integers(2, 5), seed=st.integers(0, 99))
    def test_balance(self, counts, k, seed):
        y = np.repeat(np.arange(len(counts)), counts)
        plan = stratified_kfold(y, k, seed)
        assert plan.assignments.min() >= 0
        for c in range(len(counts)):
            per_fold = np.bincount(plan.assignments[y == c], minlength=k)
            assert per_fold.max() - per_fold.min() <= 1
        sizes = np.bincount(plan.assignments, minlength=k)
        assert sizes.max() - sizes.min() <= 1

    def test_subject_folds_keep_subjects_together(self):
        subjects = [f"s{i // 6}" for i in range(60)]
        plan = subject_kfold(subjects, 5, seed=2)
        for s in set(subjects):
            assert len({plan.assignments[i] for i, t in enumerate(subjects) if t == s}) == 1


def blobs(rng, n=30, sep=4.0, classes=THREE[:2]):
    centers = rng.normal(size=(len(classes), 6)) * sep
    values = np.vstack([c + rng.normal(size=(n, 6)) for c in centers])
    labels = [c for c in classes for _ in range(n)]
    return feature_matrix(values, labels)


class TestCrossValidate:
    def plan(self, m, k=5, seed=0):
        order = {c: i for i, c in enumerate(THREE)}
        return stratified_kfold(np.array([order[c] for c in m.labels]), k, seed)

    @pytest.mark.parametrize("kind", ["svm", "tree", "forest"])
    def test_separable(self, rng, kind):
        m = blobs(rng, sep=6.0)
        report = cross_validate(m, LearnerConfig(kind=kind, n_trees=15), self.plan(m))
        assert report.accuracy >= 0.99
        assert report.confusion.total == len(m)

    def test_permuted_labels_near_prior(self):
        r = np.random.default_rng(11)
        m = blobs(r, n=100)
        shuffled = feature_matrix(m.values, list(r.permutation(m.labels)))
        report = cross_validate(shuffled, LearnerConfig(kind="svm"), self.plan(shuffled, 10))
        sigma = np.sqrt(0.25 / len(m))
        assert abs(report.accuracy - 0.5) <= 3 * sigma

    def test_constant_classifier_gives_prevalence(self, rng):
        labels = ["neutral"] * 20 + ["anger"] * 35 + ["happy"] * 15
        m = feature_matrix(rng.normal(size=(70, 4)), labels)
        report = cross_validate(m, LearnerConfig(kind="constant"), self.plan(m))
        assert report.accuracy == 20 / 70
        assert report.confusion.counts[:, 0].tolist() == [20, 35, 15]

    def test_heldout_labels_do_not_leak(self, rng):
        m = blobs(rng, n=25)
        plan = self.plan(m)
        y = np.array([0 if c == "neutral" else 1 for c in m.labels])
        for fold in range(plan.k):
            tr, te = plan.train_index(fold), plan.test_index(fold)
            base = fit_pipeline(m.values[tr], y[tr], THREE[:2], LearnerConfig())
            corrupted = y.copy()
            corrupted[te] = 1 - corrupted[te]
            again = fit_pipeline(m.values[tr], corrupted[tr], THREE[:2], LearnerConfig())
            assert base.dumps() == again.dumps()

    def test_per_fold_preprocessing_differs_from_leaky(self, rng):
        m = blobs(rng, n=25)
        per_fold = cross_validate(m, LearnerConfig(), self.plan(m))
        leaky = cross_validate(m, LearnerConfig(), self.plan(m), leaky_preproc=True)
        assert per_fold.confusion.total == leaky.confusion.total
        assert len(set(leaky.pca_components)) == 1

    def test_threads_do_not_change_result(self, rng):
        m = blobs(rng, n=40, sep=1.0, classes=THREE)
        a = cross_validate(m, LearnerConfig(), self.plan(m), n_jobs=1)
        b = cross_validate(m, LearnerConfig(), self.plan(m), n_jobs=4)
        assert a.to_json() == b.to_json()

    def test_plan_size_mismatch(self, rng):
        m = blobs(rng)
        with pytest.raises(DataError, match="fold plan"):
            cross_validate(m, LearnerConfig(), stratified_kfold(np.repeat([0, 1], 10), 5))

    def test_fold_context_on_failure(self, rng):
        m = feature_matrix(rng.normal(size=(20, 3)), ["neutral"] * 10 + ["anger"] * 10)
        plan = self.plan(m, 2)
        # SVM needs both classes in every training fold; force one fold to be single-class
        plan.assignments[:] = np.repeat([0, 1], 10)
        with pytest.raises(DataError, match="fold 0"):
            cross_validate(m, LearnerConfig(), plan)


class TestReport:
    def test_json_and_text(self):
        cm = ConfusionMatrix(THREE, [[136, 7, 32], [18, 151, 7], [43, 8, 115]])
        report = EvalReport(cm, {"filter_w": 3, "seed": 1}, "stratified", 10, (5,) * 10)
        d = report.to_dict()
        assert d["per_class_accuracy"]["neutral"] == pytest.approx(136 / 175)
        assert d["accuracy_pct"] == round(100 * 402 / 517, 2)
        assert report.to_json() == EvalReport(cm, {"seed": 1, "filter_w": 3}, "stratified", 10, (5,) * 10).to_json()
        text = report.to_text()
        assert "77.71%" in text and "filter_w=3" in text and "(stratified)" in text

    def test_pipeline_round_trip(self, rng):
        m = blobs(rng)
        y = np.array([0 if c == "neutral" else 1 for c in m.labels])
        fitted = fit_pipeline(m.values, y, THREE[:2], LearnerConfig())
        back = FittedPipeline.loads(fitted.dumps())
        assert back.dumps() == fitted.dumps()
        assert np.array_equal(back.predict(m.values), fitted.predict(m.values))
