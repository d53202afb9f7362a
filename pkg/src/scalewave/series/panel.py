# scalewave/series/panel.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
import pandas as pd

from scalewave.config.settings import STD_FLOOR
from scalewave.errors import ConfigError, DataError, RangeError

logger = logging.getLogger(__name__)

DateLike = str | pd.Timestamp


def _as_calendar(dates: Sequence[DateLike] | pd.DatetimeIndex) -> pd.DatetimeIndex:
    cal = pd.DatetimeIndex(pd.to_datetime(list(dates))).normalize()
    cal.name = "date"
    return cal


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StockPanel:
    """
    Cross-section of B stocks x M features x T trading days.

    Immutable: `values` is a read-only copy, every transform returns a new panel.
    """
    symbols: Tuple[str, ...]
    calendar: pd.DatetimeIndex
    values: np.ndarray
    feature_names: Tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        object.__setattr__(self, "feature_names", tuple(str(f) for f in self.feature_names))
        object.__setattr__(self, "calendar", _as_calendar(self.calendar))
        object.__setattr__(self, "values", _frozen(self.values))

        B, M, T = len(self.symbols), len(self.feature_names), len(self.calendar)
        if B < 1 or M < 1:
            raise DataError(f"Panel needs at least one symbol and one feature (got B={B}, M={M}).")
        if T < 2:
            raise DataError(f"Panel needs at least 2 trading days (got {T}).")
        if self.values.shape != (B, M, T):
            raise DataError(f"Panel values shape {self.values.shape} does not match (B, M, T)=({B}, {M}, {T}).")
        if not self.calendar.is_monotonic_increasing or self.calendar.has_duplicates:
            raise DataError("Panel calendar must be strictly increasing.")
        if np.isnan(self.values).any():
            raise DataError("Panel values contain NaN.")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DataError(f"Unknown feature '{name}'. Available: {list(self.feature_names)}") from None

    def feature(self, name: str) -> np.ndarray:
        """B x T array of one feature."""
        return self.values[:, self.feature_index(name), :]

    def window(self, end_index: int, length: int) -> np.ndarray:
        """B x M x length slice ending at (and including) calendar position end_index."""
        start = end_index - length + 1
        if start < 0 or end_index >= len(self.calendar):
            raise RangeError(
                f"Window of length {length} ending at index {end_index} is outside the calendar "
                f"(T={len(self.calendar)})."
            )
        return self.values[:, :, start:end_index + 1]

    def select_dates(self, mask: np.ndarray) -> "StockPanel":
        return StockPanel(self.symbols, self.calendar[mask], self.values[:, :, mask], self.feature_names)

    def select_features(self, names: Sequence[str]) -> "StockPanel":
        idx = [self.feature_index(n) for n in names]
        return StockPanel(self.symbols, self.calendar, self.values[:, idx, :], tuple(names))

    def to_frame(self) -> pd.DataFrame:
        """Long frame with columns date, symbol, <features...> (row order: date, then symbol)."""
        B, M, T = self.shape
        rows = {
            "date": np.repeat(self.calendar.strftime("%Y-%m-%d").to_numpy(), B),
            "symbol": np.tile(np.array(self.symbols, dtype=object), T),
        }
        for m, name in enumerate(self.feature_names):
            rows[name] = self.values[:, m, :].T.reshape(-1)
        return pd.DataFrame(rows)


@dataclass(frozen=True, eq=False)
class ReturnLabels:
    """
    Next-day simple returns. values[s, t] = p[s, t+1] / p[s, t] - 1, dated at t.
    """
    symbols: Tuple[str, ...]
    dates: pd.DatetimeIndex
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "dates", _as_calendar(self.dates))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (len(self.symbols), len(self.dates)):
            raise DataError(
                f"Label shape {self.values.shape} does not match ({len(self.symbols)}, {len(self.dates)})."
            )
        if (self.values <= -1.0).any():
            raise DataError("Return labels must be greater than -1.")

    def date_index(self, date: DateLike) -> int:
        ts = pd.Timestamp(date).normalize()
        pos = self.dates.get_indexer([ts])[0]
        if pos < 0:
            raise DataError(f"No return label for date {ts.date()}.")
        return int(pos)

    def at(self, date: DateLike) -> np.ndarray:
        """Cross-section of next-day returns labelled at `date`."""
        return self.values[:, self.date_index(date)]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values.T, index=self.dates, columns=list(self.symbols))


@dataclass(frozen=True)
class NormalizationStats:
    """Per-(symbol, feature) z-score statistics, each shaped B x M."""
    mean: np.ndarray
    std: np.ndarray
    window: Tuple[pd.Timestamp, pd.Timestamp] = field(default=(pd.NaT, pd.NaT))


# -----------------------------
# Normalization
# -----------------------------
def _window_mask(panel: StockPanel, stats_window: Tuple[DateLike, DateLike]) -> np.ndarray:
    start, end = (pd.Timestamp(d).normalize() for d in stats_window)
    first, last = panel.calendar[0], panel.calendar[-1]
    if start > end:
        raise RangeError(f"Statistics window start {start.date()} is after its end {end.date()}.")
    if start < first or end > last:
        raise RangeError(
            f"Statistics window {start.date()}..{end.date()} is outside the calendar "
            f"{first.date()}..{last.date()}."
        )
    mask = (panel.calendar >= start) & (panel.calendar <= end)
    if not mask.any():
        raise RangeError(f"Statistics window {start.date()}..{end.date()} contains no trading day.")
    return np.asarray(mask)


def fit_normalizer(panel: StockPanel, stats_window: Tuple[DateLike, DateLike]) -> NormalizationStats:
    """Population mean/std per (symbol, feature) over the dates inside stats_window."""
    mask = _window_mask(panel, stats_window)
    in_window = panel.values[:, :, mask]
    mean = in_window.mean(axis=2)
    std = np.maximum(in_window.std(axis=2, ddof=0), STD_FLOOR)
    window = (panel.calendar[mask][0], panel.calendar[mask][-1])
    return NormalizationStats(mean=mean, std=std, window=window)


def apply_normalizer(panel: StockPanel, stats: NormalizationStats) -> StockPanel:
    if stats.mean.shape != panel.values.shape[:2]:
        raise DataError(
            f"Normalization stats shaped {stats.mean.shape} do not fit panel {panel.values.shape[:2]}."
        )
    out = (panel.values - stats.mean[:, :, None]) / stats.std[:, :, None]
    return StockPanel(panel.symbols, panel.calendar, out, panel.feature_names)


def normalize(panel: StockPanel, stats_window: Tuple[DateLike, DateLike]) -> StockPanel:
    """
    Z-score every (symbol, feature) series with mean/std estimated on stats_window only.
    Std is floored at STD_FLOOR so constant series map to zeros.
    """
    return apply_normalizer(panel, fit_normalizer(panel, stats_window))


# -----------------------------
# Labels
# -----------------------------
def compute_labels(panel: StockPanel, price_feature: str) -> ReturnLabels:
    """r[s, t] = p[s, t+1] / p[s, t] - 1 on raw (unnormalized) prices."""
    prices = panel.feature(price_feature)
    bad = np.argwhere(prices <= 0)
    if bad.size:
        s, t = bad[0]
        raise DataError(
            f"Non-positive price {prices[s, t]!r} for symbol {panel.symbols[s]} "
            f"on {panel.calendar[t].date()} (feature '{price_feature}')."
        )
    values = prices[:, 1:] / prices[:, :-1] - 1.0
    return ReturnLabels(panel.symbols, panel.calendar[:-1], values)


# -----------------------------
# Splits
# -----------------------------
def chronological_split(
    panel: StockPanel,
    boundaries: Tuple[DateLike, DateLike],
) -> Tuple[StockPanel, StockPanel, StockPanel]:
    """
    boundaries = (valid_start, test_start).
    train: date < valid_start; validation: valid_start <= date < test_start; test: date >= test_start.
    """
    if len(boundaries) != 2:
        raise ConfigError(f"Expected two split boundaries, got {len(boundaries)}.")
    valid_start, test_start = (pd.Timestamp(b).normalize() for b in boundaries)
    if valid_start > test_start:
        raise ConfigError(
            f"Split boundaries out of order: {valid_start.date()} is after {test_start.date()}."
        )
    cal = panel.calendar
    masks = {
        "train": np.asarray(cal < valid_start),
        "validation": np.asarray((cal >= valid_start) & (cal < test_start)),
        "test": np.asarray(cal >= test_start),
    }
    for name, mask in masks.items():
        n = int(mask.sum())
        if n == 0:
            raise ConfigError(f"Split boundaries leave the {name} split empty.")
        if n < 2:
            raise ConfigError(f"Split boundaries leave the {name} split with a single date.")
    logger.info(
        "Split %d dates into train=%d validation=%d test=%d",
        len(cal), masks["train"].sum(), masks["validation"].sum(), masks["test"].sum(),
    )
    return (
        panel.select_dates(masks["train"]),
        panel.select_dates(masks["validation"]),
        panel.select_dates(masks["test"]),
    )


def concat_panels(panels: Sequence[StockPanel]) -> StockPanel:
    """Concatenate panels along the calendar (same symbols and features, calendar order)."""
    if not panels:
        raise DataError("Nothing to concatenate.")
    first = panels[0]
    for p in panels[1:]:
        if p.symbols != first.symbols or p.feature_names != first.feature_names:
            raise DataError("Panels disagree on symbols or features.")
    calendar = first.calendar.append([p.calendar for p in panels[1:]])
    values = np.concatenate([p.values for p in panels], axis=2)
    return StockPanel(first.symbols, calendar, values, first.feature_names)
