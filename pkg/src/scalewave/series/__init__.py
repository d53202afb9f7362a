# src/scalewave/series/__init__.py

from scalewave.series.panel import (
    NormalizationStats,
    ReturnLabels,
    StockPanel,
    apply_normalizer,
    chronological_split,
    compute_labels,
    concat_panels,
    fit_normalizer,
    normalize,
)

__all__ = [
    "NormalizationStats",
    "ReturnLabels",
    "StockPanel",
    "apply_normalizer",
    "chronological_split",
    "compute_labels",
    "concat_panels",
    "fit_normalizer",
    "normalize",
]
