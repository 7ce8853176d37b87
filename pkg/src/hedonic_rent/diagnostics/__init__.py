"""Out-of-sample metrics, residual diagnostics and report emission."""

from .metrics import Histogram, Metrics, drift_slope, evaluate, residual_histogram
from .report import (
    REPORT_FILES,
    SCATTER_CAP,
    DiagnosticsConfig,
    EvaluationReport,
    build_report,
    emit_report,
)
from .spatial import MoranResult, knn_neighbors, morans_i

__all__ = [
    "REPORT_FILES",
    "SCATTER_CAP",
    "DiagnosticsConfig",
    "EvaluationReport",
    "Histogram",
    "Metrics",
    "MoranResult",
    "build_report",
    "drift_slope",
    "emit_report",
    "evaluate",
    "knn_neighbors",
    "morans_i",
    "residual_histogram",
]
