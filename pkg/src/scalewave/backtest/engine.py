# scalewave/backtest/engine.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from scalewave.errors import ArgumentError, DataError
from scalewave.series.panel import ReturnLabels

logger = logging.getLogger(__name__)

ScoreInput = Union[pd.DataFrame, Mapping[object, Mapping[str, float]]]


@dataclass
class EquityCurve:
    """Daily simple returns and equity = cumprod(1 + r), starting from 1.0."""
    dates: pd.DatetimeIndex
    daily_returns: np.ndarray
    equity: Optional[np.ndarray] = None
    holdings: List[Tuple[str, ...]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.dates = pd.DatetimeIndex(self.dates)
        self.daily_returns = np.asarray(self.daily_returns, dtype=float)
        if len(self.dates) != self.daily_returns.size:
            raise DataError(f"{len(self.dates)} dates for {self.daily_returns.size} daily returns.")
        if (self.daily_returns <= -1.0).any():
            raise DataError("A daily return of -100% or worse wipes out the portfolio.")
        if self.equity is None:
            self.equity = np.cumprod(1.0 + self.daily_returns)
        self.equity = np.asarray(self.equity, dtype=float)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "date": self.dates.strftime("%Y-%m-%d"),
                "daily_return": self.daily_returns,
                "equity": self.equity,
            }
        )


def scores_frame(scores: ScoreInput, symbols: Sequence[str]) -> pd.DataFrame:
    """Dates x symbols frame in the given symbol order."""
    if isinstance(scores, pd.DataFrame):
        frame = scores.copy()
    else:
        frame = pd.DataFrame.from_dict({k: dict(v) for k, v in scores.items()}, orient="index")
    frame.index = pd.DatetimeIndex(pd.to_datetime(frame.index)).normalize()
    missing = [s for s in symbols if s not in frame.columns]
    if missing:
        raise DataError(f"Scores are missing for symbols {missing}.")
    return frame[list(symbols)].sort_index()


def _select(day_scores: np.ndarray, k: int) -> np.ndarray:
    """Top-k by score; equal scores keep symbol order."""
    return np.argsort(-day_scores, kind="stable")[:k]


def topk_backtest(scores: ScoreInput, labels: ReturnLabels, k: int,
                  cost_rate: float = 0.0) -> EquityCurve:
    """
    Each scored day: hold the k highest-scored stocks equally weighted, earn the
    mean of their next-day returns. cost_rate charges turnover (the fraction of
    the book replaced, 1.0 on the first day) as a linear cost; 0 by default.
    """
    if k < 1:
        raise ArgumentError(f"k must be >= 1, got {k}.")
    if k > len(labels.symbols):
        raise ArgumentError(f"k={k} exceeds the {len(labels.symbols)} stocks available.")
    if cost_rate < 0:
        raise ArgumentError(f"cost_rate must be >= 0, got {cost_rate}.")
    frame = scores_frame(scores, labels.symbols)
    if frame.empty:
        raise DataError("No scored days to backtest.")

    returns = np.empty(len(frame))
    holdings: List[Tuple[str, ...]] = []
    previous: set = set()
    for i, (date, row) in enumerate(frame.iterrows()):
        day_scores = row.to_numpy(dtype=float)
        if np.isnan(day_scores).any():
            raise DataError(f"Missing scores on {date.date()}.")
        chosen = _select(day_scores, k)
        picked = tuple(labels.symbols[j] for j in chosen)
        r = float(np.mean(labels.at(date)[chosen]))
        if cost_rate > 0:
            turnover = len(set(picked) - previous) / k
            r -= cost_rate * turnover
        returns[i] = r
        holdings.append(picked)
        previous = set(picked)

    logger.info("Backtested %d days with top-%d selection", len(frame), k)
    return EquityCurve(frame.index, returns, holdings=holdings)


def equal_weight_curve(labels: ReturnLabels, dates: Optional[Sequence] = None) -> EquityCurve:
    """Hold every stock equally: the cross-sectional mean return each day."""
    idx = labels.dates if dates is None else pd.DatetimeIndex(pd.to_datetime(list(dates))).normalize()
    returns = np.array([float(np.mean(labels.at(d))) for d in idx])
    return EquityCurve(idx, returns, holdings=[tuple(labels.symbols)] * len(idx))


def foresight_scores(labels: ReturnLabels, dates: Optional[Sequence] = None) -> pd.DataFrame:
    """Scores equal to the realised next-day returns (upper-bound oracle)."""
    frame = labels.to_frame()
    if dates is not None:
        frame = frame.loc[pd.DatetimeIndex(pd.to_datetime(list(dates))).normalize()]
    return frame


def scores_to_dict(frame: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    return {d.strftime("%Y-%m-%d"): {s: float(v) for s, v in row.items()} for d, row in frame.iterrows()}
