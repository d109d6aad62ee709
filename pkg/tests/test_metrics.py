"""Tests for confusion-matrix metrics."""

import numpy as np
import pytest

from treegraph.errors import ContractError
from treegraph.training import cohen_kappa, confusion_matrix, format_confusion_csv, metrics_from_confusion


def _hand_metrics(cm: np.ndarray) -> tuple[float, float, float]:
    n = cm.sum()
    oa = 100.0 * np.trace(cm) / n
    recalls = [cm[i, i] / cm[i].sum() if cm[i].sum() else 0.0 for i in range(len(cm))]
    po = np.trace(cm) / n
    pe = sum(cm[i].sum() * cm[:, i].sum() for i in range(len(cm))) / (n * n)
    return oa, 100.0 * float(np.mean(recalls)), (po - pe) / (1.0 - pe)


class TestMetrics:
    """OA, BA, precision, recall and kappa."""

    def test_two_by_two(self):
        report = metrics_from_confusion(np.array([[2, 0], [1, 1]]))
        assert report.oa == pytest.approx(75.0)
        assert report.ba == pytest.approx(75.0)
        np.testing.assert_allclose(report.per_class_recall, [100.0, 50.0])
        np.testing.assert_allclose(report.per_class_precision, [200.0 / 3.0, 100.0])
        assert report.kappa == pytest.approx(0.5)

    def test_perfect_diagonal(self):
        report = metrics_from_confusion(np.diag([3, 5, 2]))
        assert report.oa == 100.0
        assert report.ba == 100.0
        assert report.kappa == 1.0

    def test_chance_agreement(self):
        assert cohen_kappa(np.array([[1, 1], [1, 1]])) == pytest.approx(0.0)

    def test_single_class_everywhere(self):
        assert cohen_kappa(np.array([[4, 0], [0, 0]])) == 1.0

    def test_matches_hand_formulas(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            c = int(rng.integers(2, 8))
            cm = rng.integers(1, 50, size=(c, c))
            report = metrics_from_confusion(cm)
            oa, ba, kappa = _hand_metrics(cm)
            assert abs(report.oa - oa) < 1e-12
            assert abs(report.ba - ba) < 1e-12
            assert abs(report.kappa - kappa) < 1e-12

    def test_matches_sklearn(self):
        sklearn_metrics = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(1)
        y_true = rng.integers(0, 5, size=400)
        y_pred = np.where(rng.random(400) < 0.6, y_true, rng.integers(0, 5, size=400))
        report = metrics_from_confusion(confusion_matrix(y_true, y_pred, 5))
        assert report.oa == pytest.approx(100.0 * sklearn_metrics.accuracy_score(y_true, y_pred))
        assert report.ba == pytest.approx(100.0 * sklearn_metrics.balanced_accuracy_score(y_true, y_pred))
        assert report.kappa == pytest.approx(sklearn_metrics.cohen_kappa_score(y_true, y_pred))
        np.testing.assert_array_equal(report.confusion, sklearn_metrics.confusion_matrix(y_true, y_pred))

    def test_empty_class_counts_as_zero(self, caplog):
        report = metrics_from_confusion(np.array([[3, 0, 0], [1, 2, 0], [0, 0, 0]]), ["a", "b", "c"])
        np.testing.assert_allclose(report.per_class_recall, [100.0, 200.0 / 3.0, 0.0])
        assert report.per_class_precision[2] == 0.0
        assert report.ba == pytest.approx((100.0 + 200.0 / 3.0) / 3.0)
        assert "No test samples for classes ['c']" in caplog.text

    def test_empty_matrix(self):
        with pytest.raises(ContractError):
            metrics_from_confusion(np.zeros((3, 3), dtype=int))

    def test_non_square(self):
        with pytest.raises(ContractError):
            metrics_from_confusion(np.zeros((2, 3), dtype=int))


class TestConfusion:
    """Counting and export."""

    def test_rows_are_truth(self):
        cm = confusion_matrix([0, 0, 1, 2], [0, 1, 1, 0], 3)
        np.testing.assert_array_equal(cm, [[1, 1, 0], [0, 1, 0], [1, 0, 0]])

    def test_out_of_range_label(self):
        with pytest.raises(ContractError):
            confusion_matrix([0, 3], [0, 1], 3)

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            confusion_matrix([0, 1], [0], 2)

    def test_csv(self):
        report = metrics_from_confusion(np.array([[2, 0], [1, 1]]), ["oak", "pine"])
        assert format_confusion_csv(report) == "truth\\pred,oak,pine\noak,2,0\npine,1,1\n"
