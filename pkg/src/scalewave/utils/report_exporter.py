# scalewave/utils/report_exporter.py
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Mapping

import pandas as pd

from scalewave.backtest.metrics import METRIC_ORDER, MetricsReport

logger = logging.getLogger(__name__)

COLUMN_TITLES = {"arr": "ARR", "avol": "AVol", "mdd": "MDD", "asr": "ASR", "cr": "CR", "ir": "IR"}


def _cell(value: float) -> str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"


def metrics_table(reports: Mapping[str, MetricsReport]) -> str:
    """
    Aligned text table, one row per report, columns ARR AVol MDD ASR CR IR.
    """
    rows = {
        name: [_cell(getattr(r, key)) for key in METRIC_ORDER]
        for name, r in reports.items()
    }
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=[COLUMN_TITLES[k] for k in METRIC_ORDER])
    frame.index.name = "model"
    return frame.to_string() + "\n"


def rank_table(ranks: pd.DataFrame) -> str:
    frame = ranks.rename(columns=COLUMN_TITLES)
    frame.index.name = "model"
    return frame.to_string() + "\n"


def export_metrics_table(reports: Mapping[str, MetricsReport], output_path: str | Path) -> Path:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(metrics_table(reports), encoding="utf-8")
    logger.info("Wrote %s", output_path)
    return output_path
