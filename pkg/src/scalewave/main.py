# scalewave/main.py
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from scalewave import __version__
from scalewave.backtest.engine import equal_weight_curve, topk_backtest
from scalewave.backtest.metrics import compare_reports, compute_metrics, prediction_errors, rank_ic
from scalewave.config.run_config import RunConfig, iter_keys, load_run_config
from scalewave.config.settings import LOG_FORMAT, LOG_LEVEL_ENV, STD_FLOOR
from scalewave.errors import DataError, ScalewaveError, format_error_line
from scalewave.experiments import prepare_market
from scalewave.loader.panel_loader import PanelSchema, load_panel, load_series, write_panel
from scalewave.loader.synthetic import planted_motif_market, planted_wavelet_market
from scalewave.matcher.sipr import PatternLibrary, harvest_segments, kmeans_cluster, segment_series
from scalewave.model.predictor import predict_panel_scores
from scalewave.model.training import train
from scalewave.series.panel import StockPanel, apply_normalizer, chronological_split, compute_labels, fit_normalizer
from scalewave.state import RunState
from scalewave.store import artifacts
from scalewave.utils.report_exporter import export_metrics_table, metrics_table, rank_table
from scalewave.wavelet.swt import tokenize_window

logger = logging.getLogger(__name__)


# -----------------------------
# Setup
# -----------------------------
def configure_logging(verbose: bool = False) -> None:
    level_name = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
    level = logging.INFO if verbose else getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="key-value run config file")
    parser.add_argument("--verbose", action="store_true", help="log progress at INFO level")
    parser.add_argument("--no-sipr", action="store_true", help="stride-only patching (no pattern library)")
    parser.add_argument("--fixed-wavelet", choices=["haar", "db4"], default=None,
                        help="freeze filters at the given basis")
    group = parser.add_argument_group("config overrides")
    for key, _, default in iter_keys():
        group.add_argument(f"--{key}", dest=key, type=str, default=None, metavar="VALUE",
                           help=f"(default: {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scalewave", description="Scale-aware patch prediction and top-K backtests.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic panel and index CSV")
    _add_common(p)
    p.add_argument("--stocks", type=int, default=8)
    p.add_argument("--days", type=int, default=320)

    p = sub.add_parser("cluster", help="learn the pattern library from the index series")
    _add_common(p)

    p = sub.add_parser("segment", help="segment every stock channel with the pattern library")
    _add_common(p)

    p = sub.add_parser("tokenize", help="write the wavelet coefficients of the last window")
    _add_common(p)

    p = sub.add_parser("train", help="pretrain and finetune the predictor")
    _add_common(p)
    p.add_argument("--resume", action="store_true", help="continue from the saved checkpoint")

    p = sub.add_parser("backtest", help="score test days and run the top-K backtest")
    _add_common(p)
    p.add_argument("--checkpoint", type=str, default=None, help="checkpoint to score with")
    p.add_argument("--filters", type=str, default=None, help="filter file replacing the checkpoint's filters")
    p.add_argument("--scores", type=str, default=None, help="backtest a saved scores CSV instead of scoring")

    p = sub.add_parser("report", help="print and rank metrics reports")
    p.add_argument("reports", nargs="+", help="report JSON files; the first is the candidate")
    p.add_argument("--out", type=str, default=None, help="also write the metrics table here")
    p.add_argument("--verbose", action="store_true")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, str]:
    values = {key: getattr(args, key) for key, _, _ in iter_keys() if getattr(args, key, None) is not None}
    if getattr(args, "no_sipr", False):
        values["sipr.enabled"] = "false"
    if getattr(args, "fixed_wavelet", None):
        values["wavelet.basis"] = args.fixed_wavelet
        values["wavelet.trainable"] = "false"
        values["train.freeze_filters"] = "true"
    return values


def _load(args: argparse.Namespace, require_split: bool = False) -> Tuple[RunConfig, RunState]:
    config = load_run_config(args.config, _overrides(args), require_split=require_split)
    base = Path(args.config).resolve().parent if args.config else Path.cwd()
    state = RunState(base_dir=base, artifact_dir=Path(config.artifacts.dir))
    state.ensure_dirs()
    return config, state


def _schema(config: RunConfig) -> PanelSchema:
    return PanelSchema(feature_names=config.feature_list(), price_feature=config.data.price_feature)


def _library_or_none(config: RunConfig, state: RunState) -> Optional[PatternLibrary]:
    if not config.sipr.enabled:
        return None
    if not state.library_path.exists():
        raise DataError(f"Pattern library not found: {state.library_path} (run 'cluster' or pass --no-sipr).")
    return artifacts.load_library(state.library_path)


def _normalized_full(config: RunConfig, raw: StockPanel) -> StockPanel:
    """Whole panel z-scored with statistics of its training split."""
    train_raw, _, _ = chronological_split(raw, config.split_boundaries())
    stats = fit_normalizer(train_raw, (train_raw.calendar[0], train_raw.calendar[-1]))
    return apply_normalizer(raw, stats)


# -----------------------------
# Commands
# -----------------------------
def cmd_synth(args: argparse.Namespace) -> int:
    config, state = _load(args)
    seed = config.seed
    panel = planted_wavelet_market(args.stocks, args.days, seed=seed)
    _, index = planted_motif_market(args.stocks, args.days, config.sipr.l_min, config.sipr.l_max, seed=seed)
    write_panel(panel, state.resolve(config.data.panel_path))
    write_panel(index, state.resolve(config.data.index_path))
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    config, state = _load(args)
    calendar, series = load_series(state.resolve(config.data.index_path), config.data.index_feature,
                                   config.data.index_symbol)
    if config.split.valid_start is not None:
        series = series[np.asarray(calendar < pd.Timestamp(config.split.valid_start))]
    series = (series - series.mean()) / max(float(series.std()), STD_FLOOR)
    s = config.sipr
    segments = harvest_segments(series, s.l_min, s.l_max, s.harvest_stride)
    library = kmeans_cluster(
        segments, s.k, config.dtw_options(), max_iter=s.max_iter, tol=s.tol, seed=config.seed,
        l_min=s.l_min, l_max=s.l_max, dba_iterations=s.dba_iterations, init=s.init,
    )
    artifacts.save_library(library, state.library_path)
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    config, state = _load(args, require_split=True)
    raw = load_panel(state.resolve(config.data.panel_path), _schema(config))
    panel = _normalized_full(config, raw)
    library = artifacts.load_library(state.library_path)
    rows = []
    for b, symbol in enumerate(panel.symbols):
        for m, feature in enumerate(panel.feature_names):
            rows.append((symbol, feature, segment_series(panel.values[b, m], library)))
    artifacts.write_segmentation(rows, state.segmentation_path)
    return 0


def cmd_tokenize(args: argparse.Namespace) -> int:
    config, state = _load(args, require_split=True)
    raw = load_panel(state.resolve(config.data.panel_path), _schema(config))
    panel = _normalized_full(config, raw)
    L = config.wavelet.window_len
    if state.filters_path.exists():
        filters, _ = artifacts.load_filters(state.filters_path)
    else:
        filters = config.initial_filters(panel.shape[1])
    window = panel.window(len(panel.calendar) - 1, L)
    tokens = tokenize_window(window, filters, config.wavelet.levels)
    dates = panel.calendar[-L:].strftime("%Y-%m-%d")
    artifacts.write_tokens(tokens, panel.symbols, panel.feature_names, list(dates), state.tokens_path)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config, state = _load(args, require_split=True)
    raw = load_panel(state.resolve(config.data.panel_path), _schema(config))
    market = prepare_market(raw, config.split_boundaries())
    labels = compute_labels(market.train_raw, config.data.price_feature)
    library = _library_or_none(config, state)
    resume = None
    if args.resume:
        resume, _ = artifacts.load_checkpoint(state.checkpoint_path)
    tokenizer = config.tokenizer()
    result = train(
        market.train, labels, tokenizer, config.initial_filters(raw.shape[1]), config.train_config(),
        library=library, resume=resume,
    )
    artifacts.save_checkpoint(result, tokenizer, state.checkpoint_path)
    artifacts.save_filters(result.filters, tokenizer.levels, state.filters_path)
    artifacts.write_trace(result.trace, state.trace_path)
    return 0


def _benchmark(config: RunConfig, state: RunState, dates: pd.DatetimeIndex) -> Optional[np.ndarray]:
    if config.backtest.benchmark == "zero":
        return None
    calendar, series = load_series(state.resolve(config.data.index_path), config.data.index_feature,
                                   config.data.index_symbol)
    returns = pd.Series(series[1:] / series[:-1] - 1.0, index=calendar[:-1])
    missing = dates.difference(returns.index)
    if len(missing):
        raise DataError(f"Benchmark index has no return for {missing[0].date()}.")
    return returns.loc[dates].to_numpy()


def cmd_backtest(args: argparse.Namespace) -> int:
    config, state = _load(args, require_split=True)
    raw = load_panel(state.resolve(config.data.panel_path), _schema(config))
    labels = compute_labels(raw, config.data.price_feature)
    extra: Dict[str, object] = {"top_k": config.backtest.top_k}
    if args.scores:
        source = state.resolve(args.scores)
        scores = artifacts.read_scores(source)
        if len(scores) < 2:
            raise DataError(f"{source} holds fewer than 2 scored days.")
        extra["scores_file"] = state.relative(source)
    else:
        scores, library = _model_scores(args, config, state, raw)
        extra["sipr"] = library is not None
    logger.info("Backtesting %d days", len(scores))

    curve = topk_backtest(scores, labels, config.backtest.top_k, config.backtest.cost_rate)
    report = compute_metrics(curve, config.backtest.periods_per_year,
                             benchmark=_benchmark(config, state, curve.dates))
    baseline = compute_metrics(equal_weight_curve(labels, curve.dates), config.backtest.periods_per_year)
    errors = prediction_errors(scores, labels, config.train.label_scale)
    extra.update({
        "n_days": len(scores),
        "rank_ic": rank_ic(scores, labels),
        "mse": errors["mse"],
        "mae": errors["mae"],
    })
    artifacts.save_report(report, state.report_path, extra)
    artifacts.write_equity(curve, state.equity_path)
    artifacts.write_scores(scores, state.scores_path)
    export_metrics_table({"model": report, "equal_weight": baseline}, state.report_table_path)
    logger.info("Report written to %s", state.relative(state.report_path))
    return 0


def _model_scores(args: argparse.Namespace, config: RunConfig, state: RunState,
                  raw: StockPanel) -> Tuple[pd.DataFrame, Optional[PatternLibrary]]:
    """Checkpoint scores for every test day with a full window and a label."""
    panel = _normalized_full(config, raw)
    checkpoint = state.resolve(args.checkpoint) if args.checkpoint else state.checkpoint_path
    result, tokenizer = artifacts.load_checkpoint(checkpoint)
    filters = result.filters
    if args.filters:
        filters, _ = artifacts.load_filters(state.resolve(args.filters))
    if not filters.shared and filters.n_channels != panel.shape[1]:
        raise DataError(f"Filters have {filters.n_channels} rows but the panel has {panel.shape[1]} features.")

    test_start = pd.Timestamp(config.split_boundaries()[1])
    T = len(panel.calendar)
    days = [t for t in range(tokenizer.window_len - 1, T - 1) if panel.calendar[t] >= test_start]
    if len(days) < 2:
        raise DataError(f"Fewer than 2 test days have a full window of {tokenizer.window_len} and a label.")

    library = _library_or_none(config, state)
    values = predict_panel_scores(panel.values, days, result.params, filters, tokenizer, library)
    scores = pd.DataFrame(values, index=panel.calendar[days], columns=list(panel.symbols))
    return scores, library


def cmd_report(args: argparse.Namespace) -> int:
    reports = {}
    for path in args.reports:
        name = Path(path).stem
        while name in reports:
            name += "_"
        reports[name] = artifacts.load_report(path)
    names = list(reports)
    ranks = compare_reports(reports[names[0]], [reports[n] for n in names[1:]], names)
    sys.stdout.write(metrics_table(reports))
    sys.stdout.write("\n")
    sys.stdout.write(rank_table(ranks))
    if args.out:
        export_metrics_table(reports, args.out)
    return 0


HANDLERS = {
    "synth": cmd_synth,
    "cluster": cmd_cluster,
    "segment": cmd_segment,
    "tokenize": cmd_tokenize,
    "train": cmd_train,
    "backtest": cmd_backtest,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(getattr(args, "verbose", False))
    try:
        return HANDLERS[args.command](args)
    except ScalewaveError as exc:
        sys.stderr.write(format_error_line(exc) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
