# src/scalewave/wavelet/__init__.py

from scalewave.wavelet.filters import (
    FilterPair,
    filter_penalty,
    init_filters,
    max_levels,
    upsample_filter,
)
from scalewave.wavelet.swt import (
    SwtCoefficients,
    swt_backward,
    swt_forward,
    swt_inverse,
    tokenize_window,
)

__all__ = [
    "FilterPair",
    "SwtCoefficients",
    "filter_penalty",
    "init_filters",
    "max_levels",
    "swt_backward",
    "swt_forward",
    "swt_inverse",
    "tokenize_window",
    "upsample_filter",
]
