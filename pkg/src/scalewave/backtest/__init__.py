# src/scalewave/backtest/__init__.py

from scalewave.backtest.engine import EquityCurve, equal_weight_curve, topk_backtest
from scalewave.backtest.metrics import (
    MetricsReport,
    average_reports,
    compare_reports,
    compute_metrics,
    prediction_errors,
    rank_ic,
)

__all__ = [
    "EquityCurve",
    "MetricsReport",
    "average_reports",
    "compare_reports",
    "compute_metrics",
    "equal_weight_curve",
    "prediction_errors",
    "rank_ic",
    "topk_backtest",
]
