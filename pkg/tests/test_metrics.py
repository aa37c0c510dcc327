"""Tests for the confusion matrix and segmentation metrics"""

import json

import numpy as np
import pytest

from metrics import ConfusionMatrix, compute_metrics
from utils.errors import DataError, DimensionError


class TestConfusionMatrix:
    """Test ConfusionMatrix accumulation"""

    def setup_method(self):
        """Setup the two-class example"""
        self.pred = np.array([0, 0, 0, 1, 0, 0, 1, 1, 1, 1])
        self.gt = np.array([0, 0, 0, 0, 1, 1, 1, 1, 1, 1])
        self.cm = ConfusionMatrix(2).accumulate(self.pred, self.gt)

    def test_counts(self):
        """Test rows are ground truth and columns are predictions"""
        assert self.cm.counts.tolist() == [[3, 1], [2, 4]]
        assert self.cm.total == 10

    def test_ignore_label_is_skipped(self):
        """Test ground-truth 255 pixels are not counted"""
        cm = ConfusionMatrix(2).accumulate(np.array([0, 1, 1]), np.array([0, 255, 1]))
        assert cm.total == 2

    def test_merge_equals_joint_accumulation(self):
        """Test merging matrices of disjoint pixel sets"""
        first = ConfusionMatrix(2).accumulate(self.pred[:4], self.gt[:4])
        second = ConfusionMatrix(2).accumulate(self.pred[4:], self.gt[4:])
        np.testing.assert_array_equal((first + second).counts, self.cm.counts)

    def test_out_of_range(self):
        """Test predictions and labels outside the class range"""
        with pytest.raises(DataError):
            ConfusionMatrix(2).accumulate(np.array([2]), np.array([0]))
        with pytest.raises(DataError):
            ConfusionMatrix(2).accumulate(np.array([0]), np.array([3]))

    def test_matches_per_pixel_counting(self):
        """Test 200 random label maps against a plain double loop"""
        rng = np.random.default_rng(11)
        for _ in range(200):
            classes = int(rng.integers(1, 7))
            rows, cols = (int(v) for v in rng.integers(1, 12, size=2))
            pred = rng.integers(0, classes, size=(rows, cols))
            gt = rng.integers(0, classes, size=(rows, cols))
            gt[rng.random((rows, cols)) < 0.1] = 255

            expected = np.zeros((classes, classes), dtype=np.int64)
            for i in range(rows):
                for j in range(cols):
                    if gt[i, j] != 255:
                        expected[gt[i, j], pred[i, j]] += 1

            np.testing.assert_array_equal(ConfusionMatrix(classes).accumulate(pred, gt).counts, expected)

    def test_shape_mismatch(self):
        """Test prediction and ground truth must align"""
        with pytest.raises(DimensionError):
            ConfusionMatrix(2).accumulate(np.zeros(3), np.zeros(4))
        with pytest.raises(DimensionError):
            self.cm.merge(ConfusionMatrix(3))


class TestMetrics:
    """Test IoU, F1 and Acc"""

    def setup_method(self):
        """Setup the two-class example"""
        cm = ConfusionMatrix(2)
        cm.counts[...] = [[3, 1], [2, 4]]
        self.report = cm.compute(["a", "b"])

    def test_per_class_values(self):
        """Test per-class IoU, F1 and Acc"""
        np.testing.assert_allclose(self.report.iou, [0.5, 4 / 7])
        np.testing.assert_allclose(self.report.f1, [6 / 9, 8 / 11])
        np.testing.assert_allclose(self.report.acc, [0.75, 2 / 3])

    def test_means(self):
        """Test class means"""
        assert self.report.mIoU == pytest.approx(0.535714, abs=1e-6)
        assert self.report.mF1 == pytest.approx(0.696970, abs=1e-6)
        assert self.report.mAcc == pytest.approx(0.708333, abs=1e-6)

    def test_f1_iou_identity(self):
        """Test F1 = 2 IoU / (1 + IoU) for random matrices"""
        rng = np.random.default_rng(0)
        cm = ConfusionMatrix(4)
        cm.counts[...] = rng.integers(1, 20, size=(4, 4))
        report = compute_metrics(cm)
        np.testing.assert_allclose(report.f1, 2 * report.iou / (1 + report.iou), atol=1e-12)

    def test_perfect_prediction(self):
        """Test a diagonal matrix scores 1 everywhere"""
        cm = ConfusionMatrix(3)
        cm.counts[...] = np.diag([4, 5, 6])
        report = cm.compute()
        assert (report.mIoU, report.mF1, report.mAcc) == (1.0, 1.0, 1.0)

    def test_absent_class_is_excluded(self):
        """Test a class absent from both prediction and ground truth"""
        cm = ConfusionMatrix(3)
        cm.counts[...] = [[2, 0, 0], [0, 2, 0], [0, 0, 0]]
        report = cm.compute(["a", "b", "c"])
        assert report.absent == ["c"]
        assert np.isnan(report.iou[2])
        assert report.mIoU == 1.0
        assert report.as_dict()["per_class"]["c"] is None

    def test_predicted_only_class_scores_zero(self):
        """Test a class predicted but missing from ground truth stays in the means"""
        cm = ConfusionMatrix(2)
        cm.counts[...] = [[2, 2], [0, 0]]
        report = cm.compute()
        assert report.iou[1] == 0.0
        assert report.acc[1] == 0.0
        assert report.absent == []
        assert report.mIoU == pytest.approx(0.25)

    def test_generic_names(self):
        """Test missing class names are filled in"""
        cm = ConfusionMatrix(3)
        cm.counts[...] = np.eye(3, dtype=np.int64)
        assert cm.compute(["x"]).class_names == ["x", "class_1", "class_2"]


class TestReportFiles:
    """Test CSV and JSON output"""

    def setup_method(self):
        """Setup a report with an absent class"""
        cm = ConfusionMatrix(3)
        cm.counts[...] = [[3, 1, 0], [2, 4, 0], [0, 0, 0]]
        self.report = cm.compute(["a", "b", "c"])

    def test_csv(self):
        """Test config echo line, rows and n/a for absent classes"""
        lines = self.report.to_csv('{"seed":1}').splitlines()
        assert lines[0] == '# config={"seed":1}'
        assert lines[1] == "class,IoU,F1,Acc"
        assert lines[2] == "a,0.500000,0.666667,0.750000"
        assert lines[4] == "c,n/a,n/a,n/a"
        assert lines[5].startswith("mean,0.535714")

    def test_json(self, tmp_path):
        """Test the JSON payload embeds the configuration"""
        path = tmp_path / "m.json"
        self.report.write_json(path, '{"seed":1}')
        payload = json.loads(path.read_text())
        assert payload["config"] == {"seed": 1}
        assert payload["absent_classes"] == ["c"]
        assert payload["per_class"]["b"]["IoU"] == pytest.approx(4 / 7)
