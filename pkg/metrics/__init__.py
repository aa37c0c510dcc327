"""Segmentation metrics"""

from metrics.confusion_matrix import ConfusionMatrix, MetricReport, compute_metrics

__all__ = ["ConfusionMatrix", "MetricReport", "compute_metrics"]
