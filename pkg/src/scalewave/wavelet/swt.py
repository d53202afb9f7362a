# scalewave/wavelet/swt.py
"""
Stationary (undecimated) wavelet transform with learnable taps.

Level s filters are the base taps dilated by 2^s. Each level is a correlation
    c^(s+1)_t = sum_j h_s[j] c^(s)_{t+j},   d^(s+1)_t = sum_j g_s[j] c^(s)_{t+j}
starting from c^(0) = x. Indices past the end read zero (default) or wrap
(periodic). Every level keeps length L.

Stacked layout per point: [d^(1), ..., d^(S), c^(S)].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from scalewave.errors import ArgumentError
from scalewave.wavelet.filters import FilterPair, dilated_length, max_levels, upsample_filter

logger = logging.getLogger(__name__)

Padding = Literal["zero", "periodic"]


@dataclass
class SwtCoefficients:
    detail: np.ndarray        # L x S
    approx_final: np.ndarray  # L
    levels: int
    original_length: int

    def __post_init__(self) -> None:
        if self.detail.shape != (self.original_length, self.levels):
            raise ArgumentError(
                f"Detail shape {self.detail.shape} does not match L={self.original_length}, S={self.levels}."
            )
        if self.approx_final.shape != (self.original_length,):
            raise ArgumentError(f"Approximation length {self.approx_final.shape} does not match L={self.original_length}.")

    def stack(self) -> np.ndarray:
        """L x (S+1)."""
        return np.column_stack([self.detail, self.approx_final])

    @classmethod
    def from_stack(cls, stacked: np.ndarray) -> "SwtCoefficients":
        arr = np.asarray(stacked, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ArgumentError(f"Stacked coefficients must be L x (S+1) with S >= 1, got {arr.shape}.")
        return cls(arr[:, :-1].copy(), arr[:, -1].copy(), arr.shape[1] - 1, arr.shape[0])


# -----------------------------
# Correlation and its adjoint
# -----------------------------
def _correlate(signal: np.ndarray, taps: np.ndarray, padding: Padding) -> np.ndarray:
    L, K = signal.size, taps.size
    if padding == "periodic":
        idx = (np.arange(L)[:, None] + np.arange(K)[None, :]) % L
        return signal[idx] @ taps
    padded = np.concatenate([signal, np.zeros(K - 1)])
    return sliding_window_view(padded, K) @ taps


def _correlate_adjoint(u: np.ndarray, taps: np.ndarray, padding: Padding) -> np.ndarray:
    L, K = u.size, taps.size
    if padding == "periodic":
        idx = (np.arange(L)[:, None] - np.arange(K)[None, :]) % L
        return u[idx] @ taps
    padded = np.concatenate([np.zeros(K - 1), u])
    return sliding_window_view(padded, K) @ taps[::-1]


def _lagged_dot(u: np.ndarray, c: np.ndarray, lag: int, padding: Padding) -> float:
    """sum_t u[t] * c[t + lag] with the transform's boundary rule."""
    L = c.size
    if padding == "periodic":
        return float(np.dot(u, np.roll(c, -lag)))
    if lag >= L:
        return 0.0
    return float(np.dot(u[:L - lag], c[lag:]))


# -----------------------------
# Transform
# -----------------------------
def _check_input(x, filters: FilterPair, levels: int, check_depth: bool) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size < 1:
        raise ArgumentError("SWT input is empty.")
    if levels < 1:
        raise ArgumentError(f"SWT needs at least one level, got {levels}.")
    if not filters.shared:
        raise ArgumentError("Pass a single channel's filters (FilterPair.for_channel).")
    if check_depth and dilated_length(filters.k, levels - 1) > arr.size:
        raise ArgumentError(
            f"{levels} levels is too deep for length {arr.size} with {filters.k} taps; "
            f"maximum feasible is {max_levels(arr.size, filters.k)}."
        )
    return arr


def swt_forward(x, filters: FilterPair, levels: int, padding: Padding = "zero",
                check_depth: bool = True) -> SwtCoefficients:
    """
    Multi-level SWT of one sequence. check_depth=False allows inputs shorter
    than the deepest dilated filter (used for causal prefixes).
    """
    c = _check_input(x, filters, levels, check_depth)
    details: List[np.ndarray] = []
    for s in range(levels):
        details.append(_correlate(c, upsample_filter(filters.g, s), padding))
        c = _correlate(c, upsample_filter(filters.h, s), padding)
    return SwtCoefficients(np.column_stack(details), c, levels, c.size)


def swt_inverse(coeffs: SwtCoefficients, filters: FilterPair, padding: Padding = "zero") -> np.ndarray:
    """
    c^(s) = 1/2 (H_s^T c^(s+1) + G_s^T d^(s+1)), from s = S-1 down to 0.
    Exact for orthonormal taps with periodic padding; with zero padding exact
    away from k * 2^S points at either end.
    """
    if not filters.shared:
        raise ArgumentError("Pass a single channel's filters (FilterPair.for_channel).")
    if coeffs.detail.shape != (coeffs.original_length, coeffs.levels):
        raise ArgumentError("Coefficient levels do not match their length.")
    c = coeffs.approx_final.copy()
    for s in range(coeffs.levels - 1, -1, -1):
        h_s = upsample_filter(filters.h, s)
        g_s = upsample_filter(filters.g, s)
        c = 0.5 * (_correlate_adjoint(c, h_s, padding) + _correlate_adjoint(coeffs.detail[:, s], g_s, padding))
    return c


def swt_adjoint(upstream: np.ndarray, filters: FilterPair, padding: Padding = "zero") -> np.ndarray:
    """Transpose of the forward map applied to an L x (S+1) stacked array."""
    return swt_backward(None, filters, upstream.shape[1] - 1, upstream, padding, with_filters=False)[0]


def swt_backward(
    x,
    filters: FilterPair,
    levels: int,
    upstream: np.ndarray,
    padding: Padding = "zero",
    with_filters: bool = True,
    check_depth: bool = True,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gradients of a scalar loss given dLoss/dcoeffs (L x (S+1), stacked layout).

    Returns (grad_x, grad_h, grad_g). The forward pass is recomputed to get the
    intermediate approximations c^(s); tap gradients accumulate across levels.
    """
    up = np.asarray(upstream, dtype=float)
    if up.ndim != 2 or up.shape[1] != levels + 1:
        raise ArgumentError(f"Upstream gradient must be L x {levels + 1}, got {up.shape}.")
    L = up.shape[0]
    grad_h = np.zeros(filters.k)
    grad_g = np.zeros(filters.k)

    approx: List[np.ndarray] = []
    if with_filters:
        c = _check_input(x, filters, levels, check_depth)
        if c.size != L:
            raise ArgumentError(f"Input length {c.size} does not match upstream length {L}.")
        for s in range(levels):
            approx.append(c)
            c = _correlate(c, upsample_filter(filters.h, s), padding)

    gc = up[:, levels].copy()
    for s in range(levels - 1, -1, -1):
        ud = up[:, s]
        if with_filters:
            c_s = approx[s]
            step = 2 ** s
            for i in range(filters.k):
                grad_h[i] += _lagged_dot(gc, c_s, i * step, padding)
                grad_g[i] += _lagged_dot(ud, c_s, i * step, padding)
        gc = (_correlate_adjoint(gc, upsample_filter(filters.h, s), padding)
              + _correlate_adjoint(ud, upsample_filter(filters.g, s), padding))
    return gc, grad_h, grad_g


def tokenize_window(window: np.ndarray, filters: FilterPair, levels: int,
                    padding: Padding = "zero") -> np.ndarray:
    """
    B x M x L -> B x M x L x (S+1). Every (stock, feature) channel is transformed
    independently with the filters of its feature row.
    """
    arr = np.asarray(window, dtype=float)
    if arr.ndim != 3:
        raise ArgumentError(f"Expected a B x M x L window, got shape {arr.shape}.")
    B, M, L = arr.shape
    if not filters.shared and filters.n_channels != M:
        raise ArgumentError(f"Filters have {filters.n_channels} rows for {M} features.")
    out = np.empty((B, M, L, levels + 1))
    for m in range(M):
        pair = filters.for_channel(m)
        for b in range(B):
            out[b, m] = swt_forward(arr[b, m], pair, levels, padding).stack()
    logger.debug("Tokenised window %s into %s", arr.shape, out.shape)
    return out
