# scalewave/config/run_config.py
"""
Run configuration.

File format (UTF-8): one `section.key = value` per line, `#` starts a comment,
blank lines are ignored. Every key can also be given on the command line as
`--section.key value`; command-line values win.
"""
from __future__ import annotations

import logging
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional, Tuple

import pandas as pd

from scalewave.config import settings
from scalewave.errors import ArgumentError, ConfigError, DataError
from scalewave.matcher.dtw import DtwOptions
from scalewave.model.predictor import Tokenizer
from scalewave.model.training import TrainConfig
from scalewave.wavelet.filters import SUPPORTED_BASES, FilterPair, dilated_length, init_filters, max_levels

logger = logging.getLogger(__name__)

TRUE_WORDS = {"true", "1", "yes", "on"}
FALSE_WORDS = {"false", "0", "no", "off"}
NONE_WORDS = {"", "none", "null"}


@dataclass(frozen=True)
class DataConfig:
    panel_path: str = "data/panel.csv"
    index_path: str = "data/index.csv"
    index_symbol: Optional[str] = None
    index_feature: str = settings.DEFAULT_PRICE_FEATURE
    price_feature: str = settings.DEFAULT_PRICE_FEATURE
    features: Optional[str] = None  # comma separated; None keeps every column


@dataclass(frozen=True)
class SplitConfig:
    valid_start: Optional[str] = None
    test_start: Optional[str] = None


@dataclass(frozen=True)
class SiprConfig:
    enabled: bool = True
    k: int = settings.DEFAULT_K
    l_min: int = settings.DEFAULT_L_MIN
    l_max: int = settings.DEFAULT_L_MAX
    harvest_stride: int = 4
    max_iter: int = settings.DEFAULT_MAX_ITER
    tol: float = settings.DEFAULT_TOL
    dba_iterations: int = settings.DEFAULT_DBA_ITERATIONS
    init: str = "farthest"
    local_metric: str = "absolute"
    band_radius: Optional[int] = None
    weight_mode: str = "volatility"
    volatility_window: int = settings.DEFAULT_VOLATILITY_WINDOW
    symmetric_weights: bool = False


@dataclass(frozen=True)
class PatchConfig:
    patch_len: int = settings.DEFAULT_PATCH_LEN
    stride: int = settings.DEFAULT_PATCH_STRIDE
    drop_crossing: bool = False


@dataclass(frozen=True)
class WaveletConfig:
    basis: str = settings.DEFAULT_BASIS
    levels: int = settings.DEFAULT_LEVELS
    window_len: int = settings.DEFAULT_WINDOW_LEN
    trainable: bool = True
    shared: bool = False


@dataclass(frozen=True)
class TrainSection:
    learning_rate: float = settings.DEFAULT_LEARNING_RATE
    epochs: int = settings.DEFAULT_EPOCHS
    batch_size: int = settings.DEFAULT_BATCH_SIZE
    loss_mode: str = "joint"
    pretrain_epochs: Optional[int] = None
    freeze_filters: bool = False
    label_scale: float = settings.DEFAULT_LABEL_SCALE
    filter_penalty: float = 0.0
    width: int = settings.DEFAULT_MODEL_WIDTH


@dataclass(frozen=True)
class BacktestConfig:
    top_k: int = settings.DEFAULT_TOP_K
    periods_per_year: int = settings.TRADING_DAYS_PER_YEAR
    cost_rate: float = 0.0
    benchmark: str = "zero"  # zero | index


@dataclass(frozen=True)
class ArtifactConfig:
    dir: str = "artifacts"


@dataclass(frozen=True)
class RunSection:
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    sipr: SiprConfig = field(default_factory=SiprConfig)
    patch: PatchConfig = field(default_factory=PatchConfig)
    wavelet: WaveletConfig = field(default_factory=WaveletConfig)
    train: TrainSection = field(default_factory=TrainSection)
    backtest: BacktestConfig = field(default_factory=BacktestConfig)
    artifacts: ArtifactConfig = field(default_factory=ArtifactConfig)
    run: RunSection = field(default_factory=RunSection)

    @property
    def seed(self) -> int:
        return self.run.seed

    # -------------------------
    # Builders
    # -------------------------

    def feature_list(self) -> Optional[Tuple[str, ...]]:
        if self.data.features is None:
            return None
        names = tuple(f.strip() for f in self.data.features.split(",") if f.strip())
        return names or None

    def dtw_options(self) -> DtwOptions:
        s = self.sipr
        return DtwOptions(
            local_metric=s.local_metric,
            band_radius=s.band_radius,
            weight_mode=s.weight_mode,
            volatility_window=s.volatility_window,
            symmetric_weights=s.symmetric_weights,
        )

    def tokenizer(self) -> Tokenizer:
        return Tokenizer(
            window_len=self.wavelet.window_len,
            patch_len=self.patch.patch_len,
            patch_stride=self.patch.stride,
            levels=self.wavelet.levels,
            drop_crossing=self.patch.drop_crossing,
        )

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(
            learning_rate=t.learning_rate,
            epochs=t.epochs,
            batch_size=t.batch_size,
            seed=self.run.seed,
            wavelet_trainable=self.wavelet.trainable,
            loss_mode=t.loss_mode,
            pretrain_epochs=t.pretrain_epochs,
            freeze_filters=t.freeze_filters,
            label_scale=t.label_scale,
            filter_penalty=t.filter_penalty,
            width=t.width,
        )

    def initial_filters(self, n_features: int) -> FilterPair:
        return init_filters(self.wavelet.basis, n_channels=None if self.wavelet.shared else n_features)

    def split_boundaries(self) -> Tuple[str, str]:
        if self.split.valid_start is None or self.split.test_start is None:
            raise ConfigError("split.valid_start and split.test_start must both be set.")
        return self.split.valid_start, self.split.test_start

    # -------------------------
    # Validation
    # -------------------------

    def validate(self, require_split: bool = False) -> "RunConfig":
        """Check every field before any computation. Returns self."""
        s = self.sipr
        _positive("sipr.k", s.k)
        _positive("sipr.l_min", s.l_min)
        if s.l_min > s.l_max:
            raise ConfigError(f"sipr.l_min ({s.l_min}) is greater than sipr.l_max ({s.l_max}).")
        _positive("sipr.harvest_stride", s.harvest_stride)
        _positive("sipr.max_iter", s.max_iter)
        _positive("sipr.dba_iterations", s.dba_iterations)
        if s.tol <= 0:
            raise ConfigError(f"sipr.tol must be positive, got {s.tol}.")
        if s.init not in ("farthest", "kmeans++"):
            raise ConfigError(f"sipr.init must be 'farthest' or 'kmeans++', got '{s.init}'.")
        self.dtw_options()

        p, w = self.patch, self.wavelet
        _positive("patch.patch_len", p.patch_len)
        _positive("patch.stride", p.stride)
        if p.stride > p.patch_len:
            raise ConfigError(f"patch.stride ({p.stride}) exceeds patch.patch_len ({p.patch_len}).")
        if p.patch_len > w.window_len:
            raise ConfigError(f"patch.patch_len ({p.patch_len}) exceeds wavelet.window_len ({w.window_len}).")
        if w.basis not in SUPPORTED_BASES:
            raise ConfigError(f"wavelet.basis must be one of {sorted(SUPPORTED_BASES)}, got '{w.basis}'.")
        _positive("wavelet.levels", w.levels)
        k = SUPPORTED_BASES[w.basis][1]
        if dilated_length(k, w.levels - 1) > w.window_len:
            raise ConfigError(
                f"wavelet.levels={w.levels} is too deep for window_len={w.window_len} with {w.basis}; "
                f"maximum feasible is {max_levels(w.window_len, k)}."
            )
        self.tokenizer()
        self.train_config()

        b = self.backtest
        _positive("backtest.top_k", b.top_k)
        _positive("backtest.periods_per_year", b.periods_per_year)
        if b.cost_rate < 0:
            raise ConfigError(f"backtest.cost_rate must be >= 0, got {b.cost_rate}.")
        if b.benchmark not in ("zero", "index"):
            raise ConfigError(f"backtest.benchmark must be 'zero' or 'index', got '{b.benchmark}'.")

        if require_split or self.split.valid_start is not None or self.split.test_start is not None:
            valid, test = (_parse_date(n, v) for n, v in
                           zip(("split.valid_start", "split.test_start"), self.split_boundaries()))
            if valid >= test:
                raise ConfigError(f"split.valid_start ({valid.date()}) must be before split.test_start ({test.date()}).")
        return self


def _positive(name: str, value: int) -> None:
    if value < 1:
        raise ConfigError(f"{name} must be >= 1, got {value}.")


def _parse_date(name: str, value: str) -> pd.Timestamp:
    try:
        return pd.Timestamp(pd.to_datetime(value, format="%Y-%m-%d"))
    except (ValueError, TypeError):
        raise ConfigError(f"{name} is not an ISO date: '{value}'.") from None


# -----------------------------
# Keys and coercion
# -----------------------------
def _section_types() -> Dict[str, type]:
    hints = typing.get_type_hints(RunConfig)
    return {f.name: hints[f.name] for f in fields(RunConfig)}


def iter_keys() -> Iterator[Tuple[str, Any, Any]]:
    """(dotted key, field type, default) for every configurable field."""
    for section, cls in _section_types().items():
        hints = typing.get_type_hints(cls)
        defaults = cls()
        for f in fields(cls):
            yield f"{section}.{f.name}", hints[f.name], getattr(defaults, f.name)


def _coerce(key: str, raw: str, target: Any) -> Any:
    text = raw.strip()
    args = typing.get_args(target)
    if type(None) in args:
        if text.lower() in NONE_WORDS:
            return None
        target = next(a for a in args if a is not type(None))
    if target is bool:
        low = text.lower()
        if low in TRUE_WORDS:
            return True
        if low in FALSE_WORDS:
            return False
        raise ConfigError(f"{key} expects true/false, got '{raw}'.")
    if target is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got '{raw}'.") from None
    if target is float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got '{raw}'.") from None
    return text


def apply_overrides(config: RunConfig, values: Mapping[str, str]) -> RunConfig:
    """Return a copy with dotted-key string values applied."""
    types = {key: t for key, t, _ in iter_keys()}
    sections: Dict[str, Dict[str, Any]] = {}
    for key, raw in values.items():
        if key not in types:
            raise ConfigError(f"Unknown config key '{key}'.")
        section, name = key.split(".", 1)
        sections.setdefault(section, {})[name] = _coerce(key, raw, types[key])
    updates = {s: replace(getattr(config, s), **kv) for s, kv in sections.items()}
    return replace(config, **updates)


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """Raw `section.key -> value` strings; errors name the line."""
    known = {key for key, _, _ in iter_keys()}
    out: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source} line {lineno}: expected 'section.key = value'.")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source} line {lineno}: unknown config key '{key}'.")
        out[key] = value
    return out


def load_run_config(path: Optional[str | Path] = None, overrides: Optional[Mapping[str, str]] = None,
                    require_split: bool = False) -> RunConfig:
    """Defaults, then the file (if any), then overrides; validated."""
    values: Dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise DataError(f"Config file not found: {path}")
        values.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    values.update(overrides or {})
    try:
        config = apply_overrides(RunConfig(), values)
        config.validate(require_split=require_split)
    except ArgumentError as exc:
        raise ConfigError(str(exc)) from exc
    logger.debug("Loaded run config from %s with %d overrides", path or "defaults", len(overrides or {}))
    return config
