# scalewave/experiments.py
"""
Repeatable comparisons on synthetic markets.

wavelet_comparison: learnable filters (DB4 start) against filters frozen at
Haar and at DB4, measured by rank IC of test-day scores.
ablation_comparison: next-patch training with pattern-library positions
against stride-only positions, measured by validation next-patch loss.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from scalewave.backtest.metrics import rank_ic
from scalewave.loader.synthetic import planted_motif_market, planted_wavelet_market
from scalewave.matcher.dtw import DtwOptions
from scalewave.matcher.sipr import PatternLibrary, harvest_segments, kmeans_cluster, segment_window
from scalewave.model.predictor import Tokenizer, predict_panel_scores
from scalewave.model.training import TrainConfig, TrainResult, train, window_objective
from scalewave.series.panel import (
    StockPanel,
    apply_normalizer,
    chronological_split,
    compute_labels,
    fit_normalizer,
)
from scalewave.wavelet.filters import init_filters

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    n_stocks: int = 6
    n_days: int = 240
    window_len: int = 32
    patch_len: int = 8
    patch_stride: int = 4
    levels: int = 2
    width: int = 8
    learning_rate: float = 5e-3
    epochs: int = 8
    batch_size: int = 8
    l_min: int = 6
    l_max: int = 10
    k: int = 3
    harvest_stride: int = 4
    train_fraction: float = 0.5
    valid_fraction: float = 0.2

    def tokenizer(self) -> Tokenizer:
        return Tokenizer(self.window_len, self.patch_len, self.patch_stride, self.levels)


@dataclass(frozen=True)
class PreparedMarket:
    raw: StockPanel
    train: StockPanel
    valid: StockPanel
    test: StockPanel
    train_raw: StockPanel
    valid_raw: StockPanel
    test_raw: StockPanel


def split_by_fraction(panel: StockPanel, train_fraction: float, valid_fraction: float) -> Tuple[str, str]:
    """(valid_start, test_start) dates cutting the calendar at the given fractions."""
    T = len(panel.calendar)
    valid_at = int(T * train_fraction)
    test_at = int(T * (train_fraction + valid_fraction))
    cal = panel.calendar
    return cal[valid_at].strftime("%Y-%m-%d"), cal[test_at].strftime("%Y-%m-%d")


def prepare_market(panel: StockPanel, boundaries: Tuple[str, str]) -> PreparedMarket:
    """Split, then z-score every split with the training statistics."""
    train_raw, valid_raw, test_raw = chronological_split(panel, boundaries)
    stats = fit_normalizer(train_raw, (train_raw.calendar[0], train_raw.calendar[-1]))
    return PreparedMarket(
        raw=panel,
        train=apply_normalizer(train_raw, stats),
        valid=apply_normalizer(valid_raw, stats),
        test=apply_normalizer(test_raw, stats),
        train_raw=train_raw,
        valid_raw=valid_raw,
        test_raw=test_raw,
    )


def split_scores(panel: StockPanel, result: TrainResult, tokenizer: Tokenizer,
                library: Optional[PatternLibrary] = None) -> pd.DataFrame:
    """Scores for every day of `panel` that has a full window and a next-day label."""
    days = list(range(tokenizer.window_len - 1, len(panel.calendar) - 1))
    values = predict_panel_scores(panel.values, days, result.params, result.filters, tokenizer, library)
    return pd.DataFrame(values, index=panel.calendar[days], columns=list(panel.symbols))


def validation_loss(panel: StockPanel, result: TrainResult, tokenizer: Tokenizer,
                    library: Optional[PatternLibrary] = None) -> float:
    """Mean next-patch loss over every full window of `panel`."""
    L = tokenizer.window_len
    losses = []
    for t in range(L - 1, len(panel.calendar)):
        start = t - L + 1
        bounds = segment_window(panel.values, t, L, library) if library is not None else None
        loss, _, _ = window_objective(
            panel.values[:, :, start:t + 1], None, result.params, result.filters, tokenizer,
            (1.0, 0.0), bounds, start, filter_grads=False,
        )
        losses.append(loss)
    return float(np.mean(losses))


def wavelet_comparison(seeds: Sequence[int], config: Optional[ExperimentConfig] = None) -> pd.DataFrame:
    """
    One row per seed with the test rank IC of each filter variant:
    learnable (DB4 start), haar (frozen) and db4 (frozen).
    """
    config = config or ExperimentConfig()
    tokenizer = config.tokenizer()
    variants: Dict[str, Tuple[str, bool]] = {"learnable": ("db4", False), "haar": ("haar", True), "db4": ("db4", True)}
    rows = []
    for seed in seeds:
        panel = planted_wavelet_market(config.n_stocks, config.n_days, seed=seed)
        market = prepare_market(panel, split_by_fraction(panel, config.train_fraction, config.valid_fraction))
        train_labels = compute_labels(market.train_raw, "close")
        test_labels = compute_labels(market.test_raw, "close")
        row = {"seed": seed}
        for name, (basis, frozen) in variants.items():
            train_cfg = TrainConfig(
                learning_rate=config.learning_rate, epochs=config.epochs, batch_size=config.batch_size,
                seed=seed, loss_mode="score", freeze_filters=frozen, width=config.width,
            )
            filters = init_filters(basis, n_channels=panel.shape[1])
            result = train(market.train, train_labels, tokenizer, filters, train_cfg)
            row[name] = rank_ic(split_scores(market.test, result, tokenizer), test_labels)
        logger.info("wavelet comparison seed %d: %s", seed, row)
        rows.append(row)
    return pd.DataFrame(rows).set_index("seed")


def fit_library(index_series: np.ndarray, config: ExperimentConfig, seed: int) -> PatternLibrary:
    segments = harvest_segments(index_series, config.l_min, config.l_max, config.harvest_stride)
    return kmeans_cluster(
        segments, config.k, DtwOptions(weight_mode="volatility"), seed=seed,
        l_min=config.l_min, l_max=config.l_max, max_iter=10,
    )


def ablation_comparison(seeds: Sequence[int], config: Optional[ExperimentConfig] = None) -> pd.DataFrame:
    """
    One row per seed with the validation next-patch loss of stride-only
    patching ('stride') and of pattern-library positions ('sipr').
    """
    config = config or ExperimentConfig()
    tokenizer = config.tokenizer()
    rows = []
    for seed in seeds:
        panel, index = planted_motif_market(config.n_stocks, config.n_days, config.l_min, config.l_max, seed=seed)
        cut = split_by_fraction(panel, config.train_fraction, config.valid_fraction)
        market = prepare_market(panel, cut)
        index_train = prepare_market(index, cut).train
        library = fit_library(index_train.values[0, 0], config, seed)

        train_cfg = TrainConfig(
            learning_rate=config.learning_rate, epochs=config.epochs, batch_size=config.batch_size,
            seed=seed, loss_mode="next_patch", width=config.width,
        )
        filters = init_filters("db4", n_channels=panel.shape[1])
        row = {"seed": seed}
        for name, lib in (("stride", None), ("sipr", library)):
            result = train(market.train, None, tokenizer, filters, train_cfg, library=lib)
            row[name] = validation_loss(market.valid, result, tokenizer, lib)
        logger.info("ablation seed %d: %s", seed, row)
        rows.append(row)
    return pd.DataFrame(rows).set_index("seed")
