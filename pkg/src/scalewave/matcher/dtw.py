# scalewave/matcher/dtw.py
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import List, Literal, Optional, Sequence, Tuple

import numba as nb
import numpy as np

from scalewave.config.settings import DEFAULT_VOLATILITY_WINDOW, VOLATILITY_EPS
from scalewave.errors import ArgumentError

logger = logging.getLogger(__name__)

LocalMetric = Literal["absolute", "squared"]
WeightMode = Literal["uniform", "volatility"]

Path = List[Tuple[int, int]]


@dataclass(frozen=True)
class DtwOptions:
    """
    local_metric: pointwise cost |x-y| or (x-y)^2.
    band_radius: Sakoe-Chiba half-width in steps (None = unconstrained).
    weight_mode: 'volatility' weights the query's local costs by its rolling volatility.
    symmetric_weights: with 'volatility', use 0.5 * (wx_i + wy_j) instead of wx_i.
    """
    local_metric: LocalMetric = "absolute"
    band_radius: Optional[int] = None
    weight_mode: WeightMode = "uniform"
    volatility_window: int = DEFAULT_VOLATILITY_WINDOW
    symmetric_weights: bool = False

    def __post_init__(self) -> None:
        if self.local_metric not in ("absolute", "squared"):
            raise ArgumentError(f"Unknown local metric '{self.local_metric}'.")
        if self.weight_mode not in ("uniform", "volatility"):
            raise ArgumentError(f"Unknown weight mode '{self.weight_mode}'.")
        if self.band_radius is not None and self.band_radius < 0:
            raise ArgumentError(f"band_radius must be non-negative, got {self.band_radius}.")
        if self.volatility_window < 2:
            raise ArgumentError(f"volatility_window must be >= 2, got {self.volatility_window}.")

    def uniform(self) -> "DtwOptions":
        return replace(self, weight_mode="uniform")

    def to_dict(self) -> dict:
        return {
            "local_metric": self.local_metric,
            "band_radius": self.band_radius,
            "weight_mode": self.weight_mode,
            "volatility_window": self.volatility_window,
            "symmetric_weights": self.symmetric_weights,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DtwOptions":
        return cls(**data)


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: Optional[Path] = None

    @property
    def path_length(self) -> int:
        if self.path is None:
            raise ArgumentError("DTW path was not requested.")
        return len(self.path)


# -----------------------------
# Helpers
# -----------------------------
def _as_sequence(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ArgumentError(f"DTW input '{name}' is empty.")
    if not np.isfinite(arr).all():
        raise ArgumentError(f"DTW input '{name}' contains non-finite values.")
    return arr


def _local_cost(x: np.ndarray, y: np.ndarray, metric: LocalMetric) -> np.ndarray:
    diff = x[:, None] - y[None, :]
    if metric == "absolute":
        return np.abs(diff)
    return diff * diff


def _check_band(n: int, m: int, band: Optional[int]) -> None:
    if band is not None and band < abs(n - m):
        raise ArgumentError(
            f"Sakoe-Chiba band radius {band} is infeasible for lengths {n} and {m} "
            f"(needs >= {abs(n - m)})."
        )


# numba kernels; fastmath stays off so inf comparisons and sums are exact
jitkw = {
    "nopython": True,
    "nogil": True,
    "cache": False,
    "error_model": "numpy",
    "fastmath": False,
}


@nb.jit(**jitkw)
def _accumulate(cost, band):
    """
    D[i][j] = cost[i-1][j-1] + min(D[i-1][j], D[i][j-1], D[i-1][j-1]),
    D[0][0] = 0, D[i][0] = D[0][j] = inf. band < 0 means unconstrained.
    Returns the full (n+1)x(m+1) table.
    """
    n, m = cost.shape
    table = np.full((n + 1, m + 1), np.inf)
    table[0, 0] = 0.0
    for i in range(1, n + 1):
        lo, hi = 1, m
        if band >= 0:
            lo, hi = max(1, i - band), min(m, i + band)
        for j in range(lo, hi + 1):
            best = table[i - 1, j - 1]
            if table[i - 1, j] < best:
                best = table[i - 1, j]
            if table[i, j - 1] < best:
                best = table[i, j - 1]
            table[i, j] = cost[i - 1, j - 1] + best
    return table


@nb.jit(**jitkw)
def _backtrack(table):
    """Ties prefer the diagonal, then up (i-1, j), then left (i, j-1). 0-based path from the end cell back to (0, 0)."""
    i, j = table.shape[0] - 1, table.shape[1] - 1
    out = np.empty((i + j, 2), dtype=np.int64)
    k = 0
    out[k, 0] = i - 1
    out[k, 1] = j - 1
    while i != 1 or j != 1:
        ni, nj = -1, -1
        best_val = np.inf
        if i > 1 and j > 1:
            ni, nj, best_val = i - 1, j - 1, table[i - 1, j - 1]
        if i > 1 and (ni < 0 or table[i - 1, j] < best_val):
            ni, nj, best_val = i - 1, j, table[i - 1, j]
        if j > 1 and (ni < 0 or table[i, j - 1] < best_val):
            ni, nj, best_val = i, j - 1, table[i, j - 1]
        i, j = ni, nj
        k += 1
        out[k, 0] = i - 1
        out[k, 1] = j - 1
    return out[:k + 1]


def _weighted_dtw(x: np.ndarray, y: np.ndarray, wx: Optional[np.ndarray], wy: Optional[np.ndarray],
                  opts: DtwOptions, return_path: bool) -> DtwResult:
    _check_band(len(x), len(y), opts.band_radius)
    cost = _local_cost(x, y, opts.local_metric)
    if wx is not None and wy is not None:
        cost = cost * (0.5 * (wx[:, None] + wy[None, :]))
    elif wx is not None:
        cost = cost * wx[:, None]
    table = _accumulate(np.ascontiguousarray(cost, dtype=np.float64),
                        -1 if opts.band_radius is None else int(opts.band_radius))
    path = None
    if return_path:
        path = [(int(i), int(j)) for i, j in _backtrack(table)[::-1]]
    return DtwResult(distance=float(table[-1, -1]), path=path)


def _check_weights(w: Sequence[float], n: int, name: str) -> np.ndarray:
    arr = np.asarray(w, dtype=float).reshape(-1)
    if arr.size != n:
        raise ArgumentError(f"Weights '{name}' have length {arr.size}, expected {n}.")
    if not (arr > 0).all() or not np.isfinite(arr).all():
        raise ArgumentError(f"Weights '{name}' must be positive and finite.")
    return arr


# -----------------------------
# Public API
# -----------------------------
def volatility_weights(segment: Sequence[float], window: int) -> np.ndarray:
    """
    w_i = (sigma_i + eps) / mean(sigma + eps), sigma_i the population std of the
    trailing window ending at i (partial windows at the start).
    """
    seg = np.asarray(segment, dtype=float).reshape(-1)
    if window < 2:
        raise ArgumentError(f"Volatility window must be >= 2, got {window}.")
    if seg.size < window:
        raise ArgumentError(f"Volatility window {window} is larger than the segment ({seg.size}).")
    sigma = np.array([seg[max(0, i - window + 1):i + 1].std() for i in range(seg.size)])
    if np.all(sigma == sigma[0]):
        return np.ones_like(sigma)
    raw = sigma + VOLATILITY_EPS
    return raw / raw.mean()


def _auto_weights(x: np.ndarray, opts: DtwOptions) -> Optional[np.ndarray]:
    if opts.weight_mode != "volatility" or x.size < 2:
        return None
    return volatility_weights(x, min(opts.volatility_window, x.size))


def dtw_distance(x: Sequence[float], y: Sequence[float], opts: Optional[DtwOptions] = None,
                 return_path: bool = False) -> DtwResult:
    """
    DTW distance between two univariate sequences.

    With weight_mode='volatility' the query x is weighted by its own volatility
    weights (window clamped to the sequence length). The full DP table is kept
    only when the path is requested.
    """
    opts = opts or DtwOptions()
    xs = _as_sequence(x, "x")
    ys = _as_sequence(y, "y")
    wx = _auto_weights(xs, opts)
    wy = _auto_weights(ys, opts) if opts.symmetric_weights else None
    if wx is None and wy is not None:
        wx = np.ones_like(xs)
    return _weighted_dtw(xs, ys, wx, wy, opts, return_path)


def weighted_dtw_distance(x: Sequence[float], y: Sequence[float], wx: Sequence[float],
                          opts: Optional[DtwOptions] = None, return_path: bool = False,
                          wy: Optional[Sequence[float]] = None) -> DtwResult:
    """Same recurrence with local cost wx_i * d(x_i, y_j) (or the symmetric mean when wy is given)."""
    opts = opts or DtwOptions()
    xs = _as_sequence(x, "x")
    ys = _as_sequence(y, "y")
    wxa = _check_weights(wx, xs.size, "wx")
    wya = _check_weights(wy, ys.size, "wy") if wy is not None else None
    return _weighted_dtw(xs, ys, wxa, wya, opts, return_path)


def pairwise_distances(segments: Sequence[Sequence[float]], opts: Optional[DtwOptions] = None) -> np.ndarray:
    """
    matrix[i, j] = dtw_distance(seg_i, seg_j). Uniform weighting is symmetric, so
    only the upper triangle is computed; volatility weighting fills every cell.
    """
    opts = opts or DtwOptions()
    n = len(segments)
    if n < 1:
        raise ArgumentError("pairwise_distances needs at least one segment.")
    out = np.zeros((n, n))
    symmetric = opts.weight_mode == "uniform"
    for i in range(n):
        for j in range(i + 1 if symmetric else 0, n):
            if i == j:
                continue
            try:
                out[i, j] = dtw_distance(segments[i], segments[j], opts).distance
            except ArgumentError as exc:
                raise ArgumentError(f"pair ({i}, {j}): {exc}") from exc
            if symmetric:
                out[j, i] = out[i, j]
    logger.debug("Computed %dx%d DTW distance matrix", n, n)
    return out
