# scalewave/loader/synthetic.py
"""
Seeded synthetic markets for fixtures, smoke runs and ablations.

planted_motif_market: prices built from two shape motifs repeated at random
lengths, so a pattern library has something to find.
planted_wavelet_market: next-day return is a linear function of the local
slope of an observed oscillating feature.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from scalewave.errors import ArgumentError
from scalewave.series.panel import StockPanel

logger = logging.getLogger(__name__)

START_DATE = "2020-01-01"
INDEX_SYMBOL = "INDEX"


@dataclass(frozen=True)
class MotifSeries:
    values: np.ndarray
    boundaries: List[int]
    motifs: List[int]
    lengths: List[int]


def _motif_shapes(n_points: int = 64) -> List[np.ndarray]:
    grid = np.linspace(0.0, 1.0, n_points)
    bump = np.sin(np.pi * grid)                 # rise and fall
    vee = np.abs(2.0 * grid - 1.0) * 2.0 - 1.0   # fall and rise
    return [bump, vee]


def _stretch(shape: np.ndarray, length: int) -> np.ndarray:
    return np.interp(np.linspace(0.0, 1.0, length), np.linspace(0.0, 1.0, shape.size), shape)


def two_motif_series(length: int, l_min: int, l_max: int, seed: Optional[int] = None,
                     noise: float = 0.05) -> MotifSeries:
    """
    Concatenated motif instances, each stretched to a random length in
    [l_min, l_max] with a random offset and scale. The final instance is cut
    at `length`.
    """
    if not 2 <= l_min <= l_max:
        raise ArgumentError(f"Need 2 <= l_min <= l_max, got {l_min}, {l_max}.")
    if length < l_min:
        raise ArgumentError(f"length {length} is shorter than l_min {l_min}.")
    rng = np.random.default_rng(seed)
    shapes = _motif_shapes()
    values: List[np.ndarray] = []
    boundaries, motifs, lengths = [], [], []
    total = 0
    while total < length:
        which = int(rng.integers(len(shapes)))
        n = int(rng.integers(l_min, l_max + 1))
        piece = _stretch(shapes[which], n) * rng.uniform(0.8, 1.2) + rng.uniform(-0.2, 0.2)
        boundaries.append(total)
        motifs.append(which)
        lengths.append(min(n, length - total))
        values.append(piece)
        total += n
    series = np.concatenate(values)[:length] + rng.normal(0.0, noise, length)
    return MotifSeries(series, boundaries, motifs, lengths)


def _calendar(n_days: int) -> pd.DatetimeIndex:
    return pd.bdate_range(START_DATE, periods=n_days)


def planted_motif_market(n_stocks: int, n_days: int, l_min: int = 8, l_max: int = 16,
                         seed: Optional[int] = None, noise: float = 0.05) -> Tuple[StockPanel, StockPanel]:
    """
    (stock panel, index panel). Each stock's close is a positive price level
    following its own motif sequence; the index is the cross-sectional mean.
    Features: close, volume.
    """
    if n_stocks < 1:
        raise ArgumentError(f"n_stocks must be positive, got {n_stocks}.")
    rng = np.random.default_rng(seed)
    closes = []
    for b in range(n_stocks):
        motif = two_motif_series(n_days, l_min, l_max, seed=int(rng.integers(2 ** 31)), noise=noise)
        closes.append(50.0 + 5.0 * motif.values + 0.01 * np.arange(n_days))
    close = np.array(closes)
    volume = 1e6 * np.exp(rng.normal(0.0, 0.1, close.shape))
    values = np.stack([close, volume], axis=1)
    symbols = tuple(f"S{b:03d}" for b in range(n_stocks))
    calendar = _calendar(n_days)
    panel = StockPanel(symbols, calendar, values, ("close", "volume"))
    index_close = close.mean(axis=0)
    index = StockPanel((INDEX_SYMBOL,), calendar, index_close[None, None, :], ("close",))
    logger.debug("Planted motif market: %d stocks x %d days", n_stocks, n_days)
    return panel, index


def planted_wavelet_market(n_stocks: int, n_days: int, seed: Optional[int] = None,
                           period: float = 8.0, strength: float = 0.01,
                           noise: float = 0.002) -> StockPanel:
    """
    Features: close, signal. signal is a noisy oscillation with a per-stock
    phase; the return from day t to t+1 is strength * (signal[t] - signal[t-2]) / 2
    plus Gaussian noise, so it is predictable from a short-scale slope of the
    observed signal up to day t.
    """
    if n_stocks < 1 or n_days < 4:
        raise ArgumentError(f"Need n_stocks >= 1 and n_days >= 4, got {n_stocks}, {n_days}.")
    rng = np.random.default_rng(seed)
    t = np.arange(n_days)
    phase = rng.uniform(0.0, 2.0 * np.pi, n_stocks)
    drift = rng.uniform(0.8, 1.25, n_stocks)
    signal = np.sin(2.0 * np.pi * t[None, :] * drift[:, None] / period + phase[:, None])
    signal = signal + rng.normal(0.0, 0.05, signal.shape)

    slope = np.zeros_like(signal)
    slope[:, 2:] = (signal[:, 2:] - signal[:, :-2]) / 2.0
    step = strength * slope[:, :-1] + rng.normal(0.0, noise, (n_stocks, n_days - 1))
    close = np.empty_like(signal)
    close[:, 0] = 100.0
    close[:, 1:] = 100.0 * np.cumprod(1.0 + step, axis=1)

    values = np.stack([close, signal], axis=1)
    symbols = tuple(f"S{b:03d}" for b in range(n_stocks))
    logger.debug("Planted wavelet market: %d stocks x %d days", n_stocks, n_days)
    return StockPanel(symbols, _calendar(n_days), values, ("close", "signal"))
