# src/scalewave/matcher/__init__.py

from scalewave.matcher.dtw import (
    DtwOptions,
    DtwResult,
    dtw_distance,
    pairwise_distances,
    volatility_weights,
    weighted_dtw_distance,
)
from scalewave.matcher.sipr import (
    PatternLibrary,
    Segmentation,
    dba_centroid,
    farthest_first_init,
    harvest_segments,
    kmeans_cluster,
    nearest_centroid,
    segment_panel,
    segment_series,
    segment_window,
    zscore_segment,
)

__all__ = [
    "DtwOptions",
    "DtwResult",
    "PatternLibrary",
    "Segmentation",
    "dba_centroid",
    "dtw_distance",
    "farthest_first_init",
    "harvest_segments",
    "kmeans_cluster",
    "nearest_centroid",
    "pairwise_distances",
    "segment_panel",
    "segment_series",
    "segment_window",
    "volatility_weights",
    "weighted_dtw_distance",
    "zscore_segment",
]
