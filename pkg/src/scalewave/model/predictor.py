# scalewave/model/predictor.py
"""
Small autoregressive patch model.

Tokens are wavelet coefficients of patches; one causal self-attention layer
with a residual connection feeds two linear heads: a next-patch head and a
return-score head. Forward and backward are plain numpy.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from scalewave.config.settings import (
    DEFAULT_LEVELS,
    DEFAULT_MODEL_WIDTH,
    DEFAULT_PATCH_LEN,
    DEFAULT_PATCH_STRIDE,
    DEFAULT_WINDOW_LEN,
)
from scalewave.errors import ArgumentError, NumericError
from scalewave.extracter.patcher import extraction_points
from scalewave.matcher.sipr import PatternLibrary, segment_panel, segment_window
from scalewave.wavelet.filters import FilterPair, dilated_length, max_levels
from scalewave.wavelet.swt import swt_backward, swt_forward

logger = logging.getLogger(__name__)

PARAM_NAMES = ("We", "be", "Wq", "Wk", "Wv", "Wo", "Wh", "bh", "ws", "bs")


# -----------------------------
# Geometry
# -----------------------------
@dataclass(frozen=True)
class Tokenizer:
    """
    How a window becomes tokens: patch geometry plus SWT depth.
    Token k is the SWT of the series prefix ending at patch k, restricted to the
    patch span and flattened to P * (S+1) values (point-major).
    """
    window_len: int = DEFAULT_WINDOW_LEN
    patch_len: int = DEFAULT_PATCH_LEN
    patch_stride: int = DEFAULT_PATCH_STRIDE
    levels: int = DEFAULT_LEVELS
    drop_crossing: bool = False

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ArgumentError(f"levels must be >= 1, got {self.levels}.")
        if self.patch_len > self.window_len:
            raise ArgumentError(f"Patch length {self.patch_len} exceeds the window length {self.window_len}.")
        if not 1 <= self.patch_stride <= self.patch_len:
            raise ArgumentError(f"Patch stride must be in [1, {self.patch_len}], got {self.patch_stride}.")

    @property
    def token_dim(self) -> int:
        return self.patch_len * (self.levels + 1)

    def check_filters(self, filters: FilterPair) -> None:
        if dilated_length(filters.k, self.levels - 1) > self.window_len:
            raise ArgumentError(
                f"{self.levels} levels is too deep for windows of {self.window_len} with {filters.k} taps; "
                f"maximum feasible is {max_levels(self.window_len, filters.k)}."
            )

    def positions(self, boundaries: Optional[Sequence[int]], window_start: int) -> List[int]:
        return extraction_points(boundaries, window_start, self.window_len, self.patch_len,
                                 self.patch_stride, self.drop_crossing)

    def to_dict(self) -> dict:
        return {
            "window_len": self.window_len,
            "patch_len": self.patch_len,
            "patch_stride": self.patch_stride,
            "levels": self.levels,
            "drop_crossing": self.drop_crossing,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Tokenizer":
        return cls(**dict(data))


def tokenize_channel(sequence: np.ndarray, positions: Sequence[int], tokenizer: Tokenizer,
                     filters: FilterPair) -> Tuple[np.ndarray, np.ndarray]:
    """(tokens N x P(S+1), raw patches N x P) for one univariate window."""
    P, S = tokenizer.patch_len, tokenizer.levels
    tokens = np.empty((len(positions), tokenizer.token_dim))
    patches = np.empty((len(positions), P))
    for k, p in enumerate(positions):
        prefix = sequence[:p + P]
        coeffs = swt_forward(prefix, filters, S, check_depth=False).stack()
        tokens[k] = coeffs[p:p + P].reshape(-1)
        patches[k] = sequence[p:p + P]
    return tokens, patches


def tokenize_channel_backward(sequence: np.ndarray, positions: Sequence[int], tokenizer: Tokenizer,
                              filters: FilterPair, grad_tokens: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Tap gradients (grad_h, grad_g) given dLoss/dtokens."""
    P, S = tokenizer.patch_len, tokenizer.levels
    grad_h = np.zeros(filters.k)
    grad_g = np.zeros(filters.k)
    for k, p in enumerate(positions):
        prefix = sequence[:p + P]
        upstream = np.zeros((prefix.size, S + 1))
        upstream[p:p + P] = grad_tokens[k].reshape(P, S + 1)
        _, gh, gg = swt_backward(prefix, filters, S, upstream, check_depth=False)
        grad_h += gh
        grad_g += gg
    return grad_h, grad_g


# -----------------------------
# Parameters
# -----------------------------
def param_shapes(patch_len: int, levels: int, width: int) -> Dict[str, Tuple[int, ...]]:
    F, D, P = patch_len * (levels + 1), width, patch_len
    return {
        "We": (F, D), "be": (D,),
        "Wq": (D, D), "Wk": (D, D), "Wv": (D, D), "Wo": (D, D),
        "Wh": (D, P), "bh": (P,),
        "ws": (D,), "bs": (),
    }


@dataclass
class PredictorParams:
    """
    embed We (F x D) + be, attention Wq/Wk/Wv/Wo (D x D), next-patch head
    Wh (D x P) + bh, score head ws (D) + bs. F = P * (S+1).
    """
    patch_len: int
    levels: int
    width: int
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shapes = self.shapes()
        for name in PARAM_NAMES:
            if name not in self.arrays:
                raise ArgumentError(f"Missing predictor parameter '{name}'.")
            arr = np.array(self.arrays[name], dtype=float)
            if arr.shape != shapes[name]:
                raise ArgumentError(f"Parameter '{name}' has shape {arr.shape}, expected {shapes[name]}.")
            if not np.isfinite(arr).all():
                raise NumericError(f"Parameter '{name}' contains non-finite values.")
            self.arrays[name] = arr

    @property
    def token_dim(self) -> int:
        return self.patch_len * (self.levels + 1)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return param_shapes(self.patch_len, self.levels, self.width)

    @classmethod
    def init(cls, patch_len: int, levels: int, width: int = DEFAULT_MODEL_WIDTH,
             seed: Optional[int] = None) -> "PredictorParams":
        rng = np.random.default_rng(seed)
        F = patch_len * (levels + 1)
        D = width
        arrays = {
            "We": rng.normal(0.0, 1.0 / math.sqrt(F), (F, D)),
            "be": np.zeros(D),
            "Wq": rng.normal(0.0, 1.0 / math.sqrt(D), (D, D)),
            "Wk": rng.normal(0.0, 1.0 / math.sqrt(D), (D, D)),
            "Wv": rng.normal(0.0, 1.0 / math.sqrt(D), (D, D)),
            "Wo": rng.normal(0.0, 1.0 / math.sqrt(D), (D, D)),
            "Wh": rng.normal(0.0, 1.0 / math.sqrt(D), (D, patch_len)),
            "bh": np.zeros(patch_len),
            "ws": rng.normal(0.0, 1.0 / math.sqrt(D), D),
            "bs": np.array(0.0),
        }
        return cls(patch_len, levels, width, arrays)

    @classmethod
    def zeros(cls, patch_len: int, levels: int, width: int = DEFAULT_MODEL_WIDTH) -> "PredictorParams":
        shapes = param_shapes(patch_len, levels, width)
        return cls(patch_len, levels, width, {n: np.zeros(s) for n, s in shapes.items()})

    def copy(self) -> "PredictorParams":
        return PredictorParams(self.patch_len, self.levels, self.width,
                               {n: a.copy() for n, a in self.arrays.items()})

    def zeros_like(self) -> Dict[str, np.ndarray]:
        return {n: np.zeros_like(a) for n, a in self.arrays.items()}

    def to_dict(self) -> dict:
        return {
            "patch_len": self.patch_len,
            "levels": self.levels,
            "width": self.width,
            "arrays": {n: np.asarray(self.arrays[n]).tolist() for n in PARAM_NAMES},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PredictorParams":
        return cls(int(data["patch_len"]), int(data["levels"]), int(data["width"]),
                   {n: np.asarray(v, dtype=float) for n, v in data["arrays"].items()})


# -----------------------------
# Forward / backward
# -----------------------------
@dataclass
class ForwardCache:
    tokens: np.ndarray
    E: np.ndarray
    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray
    A: np.ndarray
    Z: np.ndarray
    H: np.ndarray


def _as_tokens(patch_tokens: np.ndarray, params: PredictorParams) -> np.ndarray:
    arr = np.asarray(patch_tokens, dtype=float)
    if arr.ndim == 3:
        arr = arr.reshape(arr.shape[0], -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] != params.token_dim:
        raise ArgumentError(
            f"Expected N x {params.token_dim} tokens (or N x {params.patch_len} x {params.levels + 1}), "
            f"got {np.shape(patch_tokens)}."
        )
    return arr


def forward(patch_tokens: np.ndarray, params: PredictorParams,
            return_cache: bool = False):
    """
    tokens (N x P x (S+1) or N x P(S+1)) -> (next_patch_preds N x P, scores N).
    Row k only sees tokens 0..k.
    """
    T = _as_tokens(patch_tokens, params)
    p = params.arrays
    n = T.shape[0]
    E = T @ p["We"] + p["be"]
    Q, K, V = E @ p["Wq"], E @ p["Wk"], E @ p["Wv"]
    logits = (Q @ K.T) / math.sqrt(params.width)
    future = np.triu(np.ones((n, n), dtype=bool), k=1)
    logits = np.where(future, -np.inf, logits)
    logits = logits - logits.max(axis=1, keepdims=True)
    A = np.exp(logits)
    A = A / A.sum(axis=1, keepdims=True)
    Z = A @ V
    H = E + Z @ p["Wo"]
    preds = H @ p["Wh"] + p["bh"]
    scores = H @ p["ws"] + p["bs"]
    if return_cache:
        return preds, scores, ForwardCache(T, E, Q, K, V, A, Z, H)
    return preds, scores


def backward(cache: ForwardCache, params: PredictorParams, grad_preds: np.ndarray,
             grad_scores: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """Returns (parameter gradients, dLoss/dtokens)."""
    p = params.arrays
    scale = 1.0 / math.sqrt(params.width)
    dH = grad_preds @ p["Wh"].T + np.outer(grad_scores, p["ws"])
    grads = {
        "Wh": cache.H.T @ grad_preds,
        "bh": grad_preds.sum(axis=0),
        "ws": cache.H.T @ grad_scores,
        "bs": np.array(grad_scores.sum()),
        "Wo": cache.Z.T @ dH,
    }
    dZ = dH @ p["Wo"].T
    dA = dZ @ cache.V.T
    dV = cache.A.T @ dZ
    dLogits = cache.A * (dA - np.sum(dA * cache.A, axis=1, keepdims=True))
    dQ = dLogits @ cache.K * scale
    dK = dLogits.T @ cache.Q * scale
    grads["Wq"] = cache.E.T @ dQ
    grads["Wk"] = cache.E.T @ dK
    grads["Wv"] = cache.E.T @ dV
    dE = dH + dQ @ p["Wq"].T + dK @ p["Wk"].T + dV @ p["Wv"].T
    grads["We"] = cache.tokens.T @ dE
    grads["be"] = dE.sum(axis=0)
    return grads, dE @ p["We"].T


# -----------------------------
# Losses
# -----------------------------
def next_patch_loss(preds: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error over every predicted element."""
    a = np.asarray(preds, dtype=float)
    b = np.asarray(targets, dtype=float)
    if a.shape != b.shape:
        raise ArgumentError(f"Prediction shape {a.shape} does not match target shape {b.shape}.")
    if a.size == 0:
        raise ArgumentError("next_patch_loss needs at least one element.")
    return float(np.mean((a - b) ** 2))


def next_patch_loss_grad(preds: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return 2.0 * (preds - targets) / preds.size


# -----------------------------
# Windows
# -----------------------------
@dataclass
class ChannelPass:
    sequence: np.ndarray
    positions: List[int]
    feature: int
    patches: np.ndarray
    preds: np.ndarray
    scores: np.ndarray
    cache: ForwardCache


def run_window(window: np.ndarray, params: PredictorParams, filters: FilterPair, tokenizer: Tokenizer,
               boundaries: Optional[Mapping[Tuple[int, int], Sequence[int]]] = None,
               window_start: int = 0) -> List[List[ChannelPass]]:
    """Forward every (stock, feature) channel of a B x M x L window. Result is [b][m]."""
    arr = np.asarray(window, dtype=float)
    if arr.ndim != 3:
        raise ArgumentError(f"Expected a B x M x L window, got shape {arr.shape}.")
    B, M, L = arr.shape
    if L != tokenizer.window_len:
        raise ArgumentError(f"Window length {L} does not match the tokenizer's {tokenizer.window_len}.")
    if params.patch_len != tokenizer.patch_len or params.levels != tokenizer.levels:
        raise ArgumentError("Predictor dimensions do not match the tokenizer.")
    out: List[List[ChannelPass]] = []
    for b in range(B):
        row = []
        for m in range(M):
            positions = tokenizer.positions((boundaries or {}).get((b, m)), window_start)
            pair = filters.for_channel(m)
            tokens, patches = tokenize_channel(arr[b, m], positions, tokenizer, pair)
            preds, scores, cache = forward(tokens, params, return_cache=True)
            row.append(ChannelPass(arr[b, m], positions, m, patches, preds, scores, cache))
        out.append(row)
    return out


def stock_scores(passes: List[List[ChannelPass]]) -> np.ndarray:
    """Mean over feature channels of the final-patch score."""
    return np.array([np.mean([cp.scores[-1] for cp in row]) for row in passes])


def score_window(window: np.ndarray, params: PredictorParams, filters: FilterPair, tokenizer: Tokenizer,
                 boundaries: Optional[Mapping[Tuple[int, int], Sequence[int]]] = None,
                 window_start: int = 0) -> np.ndarray:
    scores = stock_scores(run_window(window, params, filters, tokenizer, boundaries, window_start))
    if not np.isfinite(scores).all():
        raise NumericError("Non-finite score produced.")
    return scores


def predict_scores(panel_window: np.ndarray, params: PredictorParams, filters: FilterPair,
                   tokenizer: Tokenizer, library: Optional[PatternLibrary] = None) -> np.ndarray:
    """
    B scores for the window ending at day t. With a pattern library the window's
    channels are segmented and boundaries join the stride grid.
    """
    arr = np.asarray(panel_window, dtype=float)
    if arr.ndim != 3:
        raise ArgumentError(f"Expected a B x M x L window, got shape {arr.shape}.")
    L = arr.shape[2]
    if L < tokenizer.patch_len or (library is not None and L < library.l_min):
        raise ArgumentError(f"Window of length {L} is too short for scoring.")
    boundaries = segment_panel(arr, library) if library is not None else None
    return score_window(arr, params, filters, tokenizer, boundaries, window_start=0)


def predict_panel_scores(values: np.ndarray, days: Sequence[int], params: PredictorParams,
                         filters: FilterPair, tokenizer: Tokenizer,
                         library: Optional[PatternLibrary] = None) -> np.ndarray:
    """
    Scores for several days of a B x M x T array. Returns len(days) x B.
    The score for day t reads values[..., t-L+1 : t+1] only; with a library
    that window is segmented on its own.
    """
    L = tokenizer.window_len
    rows = []
    for t in days:
        start = t - L + 1
        if start < 0 or t >= values.shape[2]:
            raise ArgumentError(f"Day {t} has no full window of length {L}.")
        bounds = segment_window(values, t, L, library) if library is not None else None
        rows.append(score_window(values[:, :, start:t + 1], params, filters, tokenizer, bounds, start))
    return np.array(rows)
