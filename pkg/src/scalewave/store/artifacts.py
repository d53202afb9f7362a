# scalewave/store/artifacts.py
from __future__ import annotations

import json
import logging
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from scalewave.backtest.engine import EquityCurve
from scalewave.backtest.metrics import METRIC_ORDER, MetricsReport
from scalewave.config.settings import ARTIFACT_VERSION
from scalewave.errors import DataError, ParseError
from scalewave.matcher.dtw import DtwOptions
from scalewave.matcher.sipr import PatternLibrary, Segmentation
from scalewave.model.predictor import PredictorParams, Tokenizer
from scalewave.model.training import TraceRow, TrainResult
from scalewave.wavelet.filters import FilterPair

logger = logging.getLogger(__name__)

LIBRARY_FORMAT = "pattern_library"
FILTERS_FORMAT = "wavelet_filters"
CHECKPOINT_FORMAT = "predictor_checkpoint"
REPORT_FORMAT = "metrics_report"

# required keys -> accepted JSON types, for report files
REPORT_SCHEMA: Dict[str, Tuple[type, ...]] = {
    "format": (str,),
    "version": (int,),
    "metrics": (dict,),
    "trading_days_per_year": (int,),
}
METRIC_VALUE_TYPES = (int, float, str)
SENTINELS = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


# -----------------------------
# JSON helpers
# -----------------------------
def encode_float(x: float) -> Any:
    """Finite floats as numbers; inf/-inf/nan as strings."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def decode_float(v: Any) -> float:
    if isinstance(v, str):
        if v not in SENTINELS:
            raise DataError(f"Unknown float sentinel '{v}'.")
        return SENTINELS[v]
    return float(v)


def _write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def dump_json(payload: Mapping[str, Any], path: str | Path) -> Path:
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    return _write_text(Path(path), text + "\n")


def load_json(path: str | Path, fmt: str) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Artifact not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"Invalid JSON in {path}: {exc.msg}", line=exc.lineno, column=str(exc.colno)) from None
    if not isinstance(data, dict) or data.get("format") != fmt:
        raise DataError(f"{path} is not a {fmt} file.")
    if data.get("version") != ARTIFACT_VERSION:
        raise DataError(f"{path} has version {data.get('version')}, expected {ARTIFACT_VERSION}.")
    return data


def _header(fmt: str) -> Dict[str, Any]:
    return {"format": fmt, "version": ARTIFACT_VERSION}


@contextmanager
def _fields(path: str | Path) -> Iterator[None]:
    """Missing, extra or mistyped fields of a loaded artifact become DataError."""
    try:
        yield
    except KeyError as exc:
        raise DataError(f"{path} is missing key {exc}.") from None
    except (TypeError, ValueError, AttributeError, IndexError) as exc:
        raise DataError(f"{path} has a malformed field: {exc}") from None


# -----------------------------
# Pattern library
# -----------------------------
def library_to_dict(library: PatternLibrary) -> Dict[str, Any]:
    return {
        **_header(LIBRARY_FORMAT),
        "k": library.k,
        "l_min": library.l_min,
        "l_max": library.l_max,
        "centroids": [c.tolist() for c in library.centroids],
        "options": library.options.to_dict(),
        "inertia": encode_float(library.inertia),
        "inertia_trace": [encode_float(v) for v in library.inertia_trace],
        "assignments": [int(a) for a in library.assignments],
        "seed": library.seed,
    }


def save_library(library: PatternLibrary, path: str | Path) -> Path:
    return dump_json(library_to_dict(library), path)


def load_library(path: str | Path) -> PatternLibrary:
    data = load_json(path, LIBRARY_FORMAT)
    with _fields(path):
        return PatternLibrary(
            centroids=[np.asarray(c, dtype=float) for c in data["centroids"]],
            l_min=int(data["l_min"]),
            l_max=int(data["l_max"]),
            options=DtwOptions.from_dict(data["options"]),
            inertia=decode_float(data["inertia"]),
            inertia_trace=[decode_float(v) for v in data["inertia_trace"]],
            assignments=list(data["assignments"]),
            seed=data.get("seed"),
        )


# -----------------------------
# Filters and checkpoints
# -----------------------------
def save_filters(filters: FilterPair, levels: int, path: str | Path) -> Path:
    return dump_json({**_header(FILTERS_FORMAT), "levels": int(levels), **filters.to_dict()}, path)


def load_filters(path: str | Path) -> Tuple[FilterPair, int]:
    data = load_json(path, FILTERS_FORMAT)
    with _fields(path):
        return FilterPair.from_dict(data), int(data["levels"])


def save_checkpoint(result: TrainResult, tokenizer: Tokenizer, path: str | Path) -> Path:
    payload = {
        **_header(CHECKPOINT_FORMAT),
        "epochs_completed": result.epochs_completed,
        "tokenizer": tokenizer.to_dict(),
        "params": result.params.to_dict(),
        "filters": result.filters.to_dict(),
        "trace": [{"epoch": r.epoch, "stage": r.stage, "loss": encode_float(r.loss)} for r in result.trace],
    }
    return dump_json(payload, path)


def load_checkpoint(path: str | Path) -> Tuple[TrainResult, Tokenizer]:
    data = load_json(path, CHECKPOINT_FORMAT)
    with _fields(path):
        result = TrainResult(
            params=PredictorParams.from_dict(data["params"]),
            filters=FilterPair.from_dict(data["filters"]),
            trace=[TraceRow(int(r["epoch"]), r["stage"], decode_float(r["loss"])) for r in data["trace"]],
            epochs_completed=int(data["epochs_completed"]),
        )
        return result, Tokenizer.from_dict(data["tokenizer"])


# -----------------------------
# Reports
# -----------------------------
def report_to_dict(report: MetricsReport, extra: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    payload = {
        **_header(REPORT_FORMAT),
        "metrics": {k: encode_float(getattr(report, k)) for k in METRIC_ORDER},
        "trading_days_per_year": report.trading_days_per_year,
    }
    for key, value in (extra or {}).items():
        payload[key] = encode_float(value) if isinstance(value, float) else value
    return payload


def validate_report(payload: Mapping[str, Any]) -> None:
    """Raise DataError unless payload matches the published report layout."""
    for key, types in REPORT_SCHEMA.items():
        if key not in payload:
            raise DataError(f"Report is missing '{key}'.")
        if not isinstance(payload[key], types) or isinstance(payload[key], bool):
            raise DataError(f"Report field '{key}' has type {type(payload[key]).__name__}.")
    if payload["format"] != REPORT_FORMAT:
        raise DataError(f"Report format is '{payload['format']}', expected '{REPORT_FORMAT}'.")
    metrics = payload["metrics"]
    for key in METRIC_ORDER:
        if key not in metrics:
            raise DataError(f"Report metrics are missing '{key}'.")
        value = metrics[key]
        if not isinstance(value, METRIC_VALUE_TYPES) or isinstance(value, bool):
            raise DataError(f"Metric '{key}' has type {type(value).__name__}.")
        if isinstance(value, str) and value not in SENTINELS:
            raise DataError(f"Metric '{key}' has unknown sentinel '{value}'.")


def save_report(report: MetricsReport, path: str | Path, extra: Optional[Mapping[str, Any]] = None) -> Path:
    payload = report_to_dict(report, extra)
    validate_report(payload)
    return dump_json(payload, path)


def load_report(path: str | Path) -> MetricsReport:
    data = load_json(path, REPORT_FORMAT)
    validate_report(data)
    metrics = {k: decode_float(v) for k, v in data["metrics"].items()}
    return MetricsReport(**metrics, trading_days_per_year=int(data["trading_days_per_year"]))


# -----------------------------
# CSV artifacts
# -----------------------------
def _write_frame(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g", encoding="utf-8", lineterminator="\n")
    logger.info("Wrote %s", path)
    return path


def write_trace(trace: Iterable[TraceRow], path: str | Path) -> Path:
    rows = [{"epoch": r.epoch, "stage": r.stage, "loss": r.loss} for r in trace]
    return _write_frame(pd.DataFrame(rows, columns=["epoch", "stage", "loss"]), path)


def write_equity(curve: EquityCurve, path: str | Path) -> Path:
    return _write_frame(curve.to_frame(), path)


def write_scores(frame: pd.DataFrame, path: str | Path) -> Path:
    out = frame.copy()
    out.index = pd.DatetimeIndex(out.index).strftime("%Y-%m-%d")
    out.index.name = "date"
    return _write_frame(out.reset_index(), path)


def read_scores(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Scores not found: {path}")
    frame = pd.read_csv(path, dtype={"date": str})
    frame.index = pd.DatetimeIndex(pd.to_datetime(frame.pop("date"), format="%Y-%m-%d"))
    return frame


def write_segmentation(rows: Sequence[Tuple[str, str, Segmentation]], path: str | Path) -> Path:
    """One line per segment: symbol,feature,start,length,pattern,distance."""
    records = []
    for symbol, feature, seg in rows:
        for start, length, pattern, dist in zip(seg.boundaries, seg.lengths, seg.assignments, seg.distances):
            records.append(
                {"symbol": symbol, "feature": feature, "start": start, "length": length,
                 "pattern": pattern, "distance": dist}
            )
    columns = ["symbol", "feature", "start", "length", "pattern", "distance"]
    return _write_frame(pd.DataFrame(records, columns=columns), path)


def write_tokens(tokens: np.ndarray, symbols: Sequence[str], features: Sequence[str],
                 dates: Sequence[str], path: str | Path) -> Path:
    """B x M x L x (S+1) coefficients as symbol,feature,date,d1..dS,cS."""
    B, M, L, S1 = tokens.shape
    names = [f"d{s + 1}" for s in range(S1 - 1)] + [f"c{S1 - 1}"]
    frames = []
    for b in range(B):
        for m in range(M):
            part = pd.DataFrame(tokens[b, m], columns=names)
            part.insert(0, "date", list(dates))
            part.insert(0, "feature", features[m])
            part.insert(0, "symbol", symbols[b])
            frames.append(part)
    return _write_frame(pd.concat(frames, ignore_index=True), path)
