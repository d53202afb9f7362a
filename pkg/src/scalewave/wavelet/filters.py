# scalewave/wavelet/filters.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
import pywt

from scalewave.errors import ArgumentError

logger = logging.getLogger(__name__)

Basis = Literal["haar", "db4"]

# basis -> (pywt name, tap count)
SUPPORTED_BASES = {
    "haar": ("haar", 2),
    "db4": ("db4", 8),
}


@dataclass
class FilterPair:
    """
    Low-pass h and high-pass g taps.

    Either 1-D (k,) shared by every channel, or 2-D (C, k) with one row per
    feature channel. Taps are free parameters once training starts.
    """
    h: np.ndarray
    g: np.ndarray
    basis: str = "custom"

    def __post_init__(self) -> None:
        self.h = np.array(self.h, dtype=float)
        self.g = np.array(self.g, dtype=float)
        if self.h.shape != self.g.shape:
            raise ArgumentError(f"h {self.h.shape} and g {self.g.shape} must have the same shape.")
        if self.h.ndim not in (1, 2):
            raise ArgumentError(f"Filter taps must be 1-D or 2-D, got {self.h.ndim}-D.")
        k = self.h.shape[-1]
        if k < 2 or k % 2:
            raise ArgumentError(f"Tap count must be even and >= 2, got {k}.")
        if not (np.isfinite(self.h).all() and np.isfinite(self.g).all()):
            raise ArgumentError("Filter taps must be finite.")

    @property
    def k(self) -> int:
        return int(self.h.shape[-1])

    @property
    def shared(self) -> bool:
        return self.h.ndim == 1

    @property
    def n_channels(self) -> int:
        return 1 if self.shared else int(self.h.shape[0])

    def for_channel(self, m: int) -> "FilterPair":
        if self.shared:
            return FilterPair(self.h, self.g, self.basis)
        if not 0 <= m < self.h.shape[0]:
            raise ArgumentError(f"Channel {m} out of range for {self.h.shape[0]} filter rows.")
        return FilterPair(self.h[m], self.g[m], self.basis)

    def per_channel(self, n_channels: int) -> "FilterPair":
        """Copy with one (identical) row per channel."""
        if not self.shared:
            if self.h.shape[0] != n_channels:
                raise ArgumentError(f"Filters have {self.h.shape[0]} rows, expected {n_channels}.")
            return self.copy()
        return FilterPair(np.tile(self.h, (n_channels, 1)), np.tile(self.g, (n_channels, 1)), self.basis)

    def copy(self) -> "FilterPair":
        return FilterPair(self.h.copy(), self.g.copy(), self.basis)

    def to_dict(self) -> dict:
        return {"basis": self.basis, "k": self.k, "h": self.h.tolist(), "g": self.g.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FilterPair":
        return cls(np.asarray(data["h"], dtype=float), np.asarray(data["g"], dtype=float), data.get("basis", "custom"))


def quadrature_mirror(h: np.ndarray) -> np.ndarray:
    """g[n] = (-1)^n h[k-1-n]."""
    h = np.asarray(h, dtype=float)
    signs = np.where(np.arange(h.size) % 2 == 0, 1.0, -1.0)
    return signs * h[::-1]


def init_filters(basis: str, k: Optional[int] = None, n_channels: Optional[int] = None) -> FilterPair:
    """
    Orthonormal starting taps. haar uses k=2, db4 uses k=8; the low-pass taps
    are PyWavelets' reconstruction filter, the high-pass follows by
    quadrature-mirror alternation. n_channels gives one row per channel.
    """
    if basis not in SUPPORTED_BASES:
        raise ArgumentError(f"Unsupported wavelet basis '{basis}'. Choose from {sorted(SUPPORTED_BASES)}.")
    name, taps = SUPPORTED_BASES[basis]
    if k is not None and k != taps:
        raise ArgumentError(f"Basis '{basis}' has {taps} taps, got k={k}.")
    if basis == "haar":
        h = np.array([1.0, 1.0]) / math.sqrt(2.0)
    else:
        h = np.array(pywt.Wavelet(name).rec_lo, dtype=float)
    pair = FilterPair(h, quadrature_mirror(h), basis)
    if n_channels is not None:
        pair = pair.per_channel(n_channels)
    logger.debug("Initialised %s filters (k=%d, channels=%s)", basis, taps, n_channels or "shared")
    return pair


def upsample_filter(taps, level: int) -> np.ndarray:
    """Insert 2^level - 1 zeros between taps: length k + (k-1)(2^level - 1)."""
    if level < 0:
        raise ArgumentError(f"Level must be non-negative, got {level}.")
    taps = np.asarray(taps, dtype=float).reshape(-1)
    step = 2 ** level
    out = np.zeros((taps.size - 1) * step + 1)
    out[::step] = taps
    return out


def dilated_length(k: int, level: int) -> int:
    return k + (k - 1) * (2 ** level - 1)


def max_levels(length: int, k: int) -> int:
    """Largest S whose deepest dilated filter (level S-1) fits in `length` points."""
    s = 0
    while dilated_length(k, s) <= length:
        s += 1
    return s


def filter_penalty(filters: FilterPair) -> float:
    """(sum h - sqrt 2)^2 + (sum g)^2, summed over channel rows."""
    h = np.atleast_2d(filters.h)
    g = np.atleast_2d(filters.g)
    return float(np.sum((h.sum(axis=1) - math.sqrt(2.0)) ** 2) + np.sum(g.sum(axis=1) ** 2))


def filter_penalty_grad(filters: FilterPair) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of filter_penalty, shaped like filters.h and filters.g."""
    h = np.atleast_2d(filters.h)
    g = np.atleast_2d(filters.g)
    gh = np.repeat(2.0 * (h.sum(axis=1, keepdims=True) - math.sqrt(2.0)), h.shape[1], axis=1)
    gg = np.repeat(2.0 * g.sum(axis=1, keepdims=True), g.shape[1], axis=1)
    return gh.reshape(filters.h.shape), gg.reshape(filters.g.shape)
