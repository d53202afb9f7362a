# scalewave/backtest/metrics.py
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from scalewave.backtest.engine import EquityCurve, scores_frame
from scalewave.config.settings import TRADING_DAYS_PER_YEAR
from scalewave.errors import ArgumentError, DataError
from scalewave.series.panel import ReturnLabels

logger = logging.getLogger(__name__)

# column order of the printed table
METRIC_ORDER = ("arr", "avol", "mdd", "asr", "cr", "ir")
HIGHER_IS_BETTER = ("arr", "asr", "cr", "ir")
LOWER_ABS_IS_BETTER = ("avol", "mdd")


@dataclass(frozen=True)
class MetricsReport:
    arr: float
    avol: float
    mdd: float
    asr: float
    cr: float
    ir: float
    trading_days_per_year: int = TRADING_DAYS_PER_YEAR

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "MetricsReport":
        return cls(**{k: data[k] for k in METRIC_ORDER},
                   trading_days_per_year=int(data.get("trading_days_per_year", TRADING_DAYS_PER_YEAR)))


def _all_equal(x: np.ndarray) -> bool:
    return bool(np.all(x == x[0]))


def _ratio(num: float, den: float, name: str) -> float:
    """
    num/den. A zero den gives +inf for num > 0, -inf for num < 0 and nan
    for num == 0, with a warning.
    """
    if den > 0:
        return num / den
    sentinel = math.copysign(math.inf, num) if num != 0 else math.nan
    logger.warning("%s has a zero denominator; reporting %s", name, sentinel)
    return sentinel


def max_drawdown(equity: np.ndarray) -> float:
    """Largest peak-to-trough fall of the curve as given; 0 for fewer than 2 points."""
    eq = np.asarray(equity, dtype=float).reshape(-1)
    if eq.size < 2:
        return 0.0
    peaks = np.maximum.accumulate(eq)
    return float(np.max(1.0 - eq / peaks))


def compute_metrics(curve: EquityCurve, periods_per_year: int = TRADING_DAYS_PER_YEAR,
                    benchmark: Optional[Sequence[float]] = None) -> MetricsReport:
    """
    ARR = mean * A, AVol = sample std * sqrt(A), MDD on the equity curve,
    ASR = ARR / AVol, CR = ARR / MDD, IR = annualized mean / std of the return
    over the benchmark (zero by default). Zero denominators give sentinels.
    """
    r = np.asarray(curve.daily_returns, dtype=float)
    if r.size < 2:
        raise ArgumentError(f"Metrics need at least 2 days, got {r.size}.")
    if periods_per_year < 1:
        raise ArgumentError(f"periods_per_year must be >= 1, got {periods_per_year}.")
    A = periods_per_year

    arr = float(np.mean(r) * A)
    avol = 0.0 if _all_equal(r) else float(np.std(r, ddof=1) * math.sqrt(A))
    mdd = max_drawdown(curve.equity)

    if benchmark is None:
        active = r
    else:
        bench = np.asarray(benchmark, dtype=float)
        if bench.shape != r.shape:
            raise DataError(f"Benchmark has {bench.size} returns for {r.size} days.")
        active = r - bench
    active_mean = float(np.mean(active) * A)
    active_vol = 0.0 if _all_equal(active) else float(np.std(active, ddof=1) * math.sqrt(A))

    return MetricsReport(
        arr=arr,
        avol=avol,
        mdd=mdd,
        asr=_ratio(arr, avol, "ASR"),
        cr=_ratio(arr, mdd, "CR"),
        ir=_ratio(active_mean, active_vol, "IR"),
        trading_days_per_year=A,
    )


def compare_reports(candidate: MetricsReport, baselines: Sequence[MetricsReport],
                    names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Rank table, one row per report (candidate first), one column per metric.
    Rank 1 is best; ties share the lowest rank. AVol and MDD rank by absolute
    value, lower first; the rest rank higher first.
    """
    reports = [candidate, *baselines]
    if names is None:
        names = ["candidate"] + [f"baseline_{i + 1}" for i in range(len(baselines))]
    if len(names) != len(reports):
        raise ArgumentError(f"{len(names)} names for {len(reports)} reports.")
    values = pd.DataFrame([r.to_dict() for r in reports], index=list(names))[list(METRIC_ORDER)]
    ranks = {}
    for col in METRIC_ORDER:
        if col in LOWER_ABS_IS_BETTER:
            ranks[col] = values[col].abs().rank(method="min", ascending=True, na_option="bottom")
        else:
            ranks[col] = values[col].rank(method="min", ascending=False, na_option="bottom")
    return pd.DataFrame(ranks).astype(int)


def average_reports(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Field-wise mean of repeated runs."""
    if not reports:
        raise ArgumentError("Nothing to average.")
    A = {r.trading_days_per_year for r in reports}
    if len(A) != 1:
        raise ArgumentError("Reports use different annualization constants.")
    means = {k: float(np.mean([getattr(r, k) for r in reports])) for k in METRIC_ORDER}
    return MetricsReport(**means, trading_days_per_year=A.pop())


# -----------------------------
# Accuracy
# -----------------------------
def _aligned(scores, labels: ReturnLabels):
    frame = scores_frame(scores, labels.symbols)
    realised = np.array([labels.at(d) for d in frame.index])
    return frame.to_numpy(dtype=float), realised


def prediction_errors(scores, labels: ReturnLabels, label_scale: float = 1.0) -> Dict[str, float]:
    """MSE and MAE of scores / label_scale against the realised next-day returns."""
    pred, realised = _aligned(scores, labels)
    diff = pred / label_scale - realised
    return {"mse": float(np.mean(diff ** 2)), "mae": float(np.mean(np.abs(diff)))}


def rank_ic_series(scores, labels: ReturnLabels) -> pd.Series:
    """Spearman correlation between scores and realised returns, per day (NaN on constant days)."""
    frame = scores_frame(scores, labels.symbols)
    pred, realised = _aligned(frame, labels)
    values: List[float] = []
    for p, r in zip(pred, realised):
        if _all_equal(p) or _all_equal(r):
            values.append(math.nan)
            continue
        values.append(float(spearmanr(p, r)[0]))
    return pd.Series(values, index=frame.index, name="rank_ic")


def rank_ic(scores, labels: ReturnLabels) -> float:
    series = rank_ic_series(scores, labels).dropna()
    if series.empty:
        return math.nan
    return float(series.mean())
