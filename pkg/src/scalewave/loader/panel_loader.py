# scalewave/loader/panel_loader.py
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from scalewave.config.settings import DEFAULT_FEATURES, DEFAULT_PRICE_FEATURE
from scalewave.errors import DataError, ParseError
from scalewave.series.panel import StockPanel

logger = logging.getLogger(__name__)

HEADER_LINE = 1


@dataclass(frozen=True)
class PanelSchema:
    """
    Ingestion config.

    feature_names=None keeps every column after date/symbol in file order.
    The documented default feature set is OHLCV plus a daily returns column.
    """
    feature_names: Optional[Tuple[str, ...]] = None
    date_column: str = "date"
    symbol_column: str = "symbol"
    price_feature: str = DEFAULT_PRICE_FEATURE

    @classmethod
    def ohlcv(cls) -> "PanelSchema":
        return cls(feature_names=DEFAULT_FEATURES)


# -----------------------------
# Cell helpers
# -----------------------------
def _clean_cell_text(v) -> str:
    if v is None:
        return ""
    try:
        if pd.isna(v):
            return ""
    except (TypeError, ValueError):
        pass
    return str(v).strip()


def _normalize_header_text(s: str) -> str:
    return _clean_cell_text(s).lower().replace(" ", "_")


def _parse_float(text: str, line: int, column: str) -> float:
    s = _clean_cell_text(text)
    if not s:
        return float("nan")
    try:
        return float(s)
    except ValueError:
        raise ParseError(f"Non-numeric value '{s}'", line=line, column=column) from None


def _parse_date(text: str, line: int, column: str) -> pd.Timestamp:
    s = _clean_cell_text(text)
    try:
        ts = pd.to_datetime(s, format="%Y-%m-%d")
    except (ValueError, TypeError):
        ts = pd.NaT
    if not s or pd.isna(ts):
        raise ParseError(f"Invalid ISO-8601 date '{s}'", line=line, column=column)
    return pd.Timestamp(ts)


# -----------------------------
# CSV reading
# -----------------------------
def _read_rows(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise DataError(f"Input file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"Input file is empty: {path}") from None
    except pd.errors.ParserError as exc:
        found = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"Malformed CSV in {path}: {str(exc).strip()}",
                         line=int(found.group(1)) if found else None) from None
    if df.empty:
        raise DataError(f"Input file has a header but no rows: {path}")
    # missing trailing fields are the only source of real NaN under keep_default_na=False
    short = df.isna().to_numpy()
    if short.any():
        row, col = (int(i[0]) for i in np.nonzero(short))
        raise ParseError(f"Row has fewer fields than the header in {path}",
                         line=row + HEADER_LINE + 1, column=str(df.columns[col]))
    return df


def _detect_columns(df: pd.DataFrame, schema: PanelSchema, path: Path) -> Tuple[str, str, List[str]]:
    """
    Returns (date_col, symbol_col, feature_cols) using case-insensitive header matching.
    """
    norm_to_real = {_normalize_header_text(c): c for c in df.columns}

    def find(name: str) -> str:
        key = _normalize_header_text(name)
        if key not in norm_to_real:
            raise DataError(f"Column '{name}' not found in {path}. Found columns={list(df.columns)}.")
        return norm_to_real[key]

    date_col = find(schema.date_column)
    symbol_col = find(schema.symbol_column)
    if schema.feature_names is None:
        features = [c for c in df.columns if c not in (date_col, symbol_col)]
    else:
        features = [find(f) for f in schema.feature_names]
    if not features:
        raise DataError(f"No feature columns in {path}.")
    return date_col, symbol_col, features


def load_panel(path: str | Path, schema: Optional[PanelSchema] = None) -> StockPanel:
    """
    Read a long CSV `date,symbol,<features...>` into a date-aligned StockPanel.

    Alignment: calendar is the union of all dates; each symbol is forward-filled
    within itself, then leading dates where any symbol still has no value are dropped.
    """
    path = Path(path)
    schema = schema or PanelSchema()
    df = _read_rows(path)
    date_col, symbol_col, feature_cols = _detect_columns(df, schema, path)

    lines = np.arange(len(df)) + HEADER_LINE + 1
    dates = [_parse_date(v, int(ln), date_col) for v, ln in zip(df[date_col], lines)]
    symbols = [_clean_cell_text(v) for v in df[symbol_col]]
    for sym, ln in zip(symbols, lines):
        if not sym:
            raise ParseError("Empty symbol", line=int(ln), column=symbol_col)
    columns: Dict[str, List[float]] = {
        c: [_parse_float(v, int(ln), c) for v, ln in zip(df[c], lines)] for c in feature_cols
    }

    frame = pd.DataFrame(columns)
    frame.insert(0, "symbol", symbols)
    frame.insert(0, "date", pd.DatetimeIndex(dates))
    frame["line"] = lines

    # dates must be strictly increasing per symbol in file order
    for sym, grp in frame.groupby("symbol", sort=False):
        diffs = grp["date"].diff().dt.days.to_numpy()[1:]
        bad = np.flatnonzero(diffs <= 0)
        if bad.size:
            ln = int(grp["line"].iloc[bad[0] + 1])
            raise DataError(f"Dates for symbol {sym} are not strictly increasing at line {ln} of {path}.")

    calendar = pd.DatetimeIndex(sorted(frame["date"].unique()))
    symbol_order = sorted(frame["symbol"].unique())
    B, M = len(symbol_order), len(feature_cols)
    values = np.empty((B, M, len(calendar)))
    filled = 0
    for b, sym in enumerate(symbol_order):
        grp = frame[frame["symbol"] == sym].set_index("date")[feature_cols].reindex(calendar)
        filled += int(grp.isna().to_numpy().sum())
        values[b] = grp.ffill().to_numpy().T

    # drop leading dates where some symbol has not started yet
    has_all = ~np.isnan(values).any(axis=(0, 1))
    if not has_all.any():
        raise DataError(f"No date in {path} has values for every symbol.")
    first_full = int(np.argmax(has_all))
    values = values[:, :, first_full:]
    calendar = calendar[first_full:]
    if np.isnan(values).any():
        raise DataError(f"Missing values remain after forward-fill in {path}.")
    if len(calendar) < 2:
        raise DataError(f"Need at least 2 aligned dates in {path}, found {len(calendar)}.")

    logger.info(
        "Loaded %s: %d symbols x %d features x %d dates (%d cells forward-filled, %d leading dates dropped)",
        path, B, M, len(calendar), filled, first_full,
    )
    names = [_normalize_header_text(c) for c in feature_cols]
    return StockPanel(tuple(symbol_order), calendar, values, tuple(names))


def write_panel(panel: StockPanel, path: str | Path) -> Path:
    """Write the long CSV format read by load_panel; floats use round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    panel.to_frame().to_csv(path, index=False, float_format="%.17g", encoding="utf-8")
    return path


def load_series(path: str | Path, feature: str, symbol: Optional[str] = None,
                schema: Optional[PanelSchema] = None) -> Tuple[pd.DatetimeIndex, np.ndarray]:
    """
    One univariate series (e.g. the market index) from a panel CSV.
    symbol=None requires the file to hold exactly one symbol.
    """
    panel = load_panel(path, schema)
    if symbol is None:
        if len(panel.symbols) != 1:
            raise DataError(f"{path} holds {len(panel.symbols)} symbols; name the index symbol explicitly.")
        b = 0
    else:
        if symbol not in panel.symbols:
            raise DataError(f"Symbol {symbol} not found in {path}.")
        b = panel.symbols.index(symbol)
    return panel.calendar, np.array(panel.feature(feature)[b])

