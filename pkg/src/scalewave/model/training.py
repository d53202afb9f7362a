# scalewave/model/training.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np

from scalewave.config.settings import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LABEL_SCALE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MODEL_WIDTH,
    JOINT_LOSS_WEIGHT,
)
from scalewave.errors import ArgumentError, DataError, NumericError
from scalewave.matcher.sipr import PatternLibrary, segment_window
from scalewave.model.predictor import (
    PredictorParams,
    Tokenizer,
    backward,
    next_patch_loss,
    next_patch_loss_grad,
    run_window,
    tokenize_channel_backward,
)
from scalewave.series.panel import ReturnLabels, StockPanel
from scalewave.wavelet.filters import FilterPair, filter_penalty, filter_penalty_grad

logger = logging.getLogger(__name__)

LossMode = Literal["next_patch", "score", "joint"]
Stage = Literal["pretrain", "finetune"]
Boundaries = Mapping[Tuple[int, int], Sequence[int]]


@dataclass(frozen=True)
class TrainConfig:
    """
    Two-stage schedule. next_patch runs only the pretrain stage, score only the
    finetune stage, joint runs pretrain_epochs (default: epochs) of next-patch
    pretraining and then epochs of finetuning on 0.5 next-patch + 0.5 score.
    """
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = 0
    wavelet_trainable: bool = True
    loss_mode: LossMode = "joint"
    pretrain_epochs: Optional[int] = None
    freeze_filters: bool = False
    label_scale: float = DEFAULT_LABEL_SCALE
    filter_penalty: float = 0.0
    width: int = DEFAULT_MODEL_WIDTH

    def __post_init__(self) -> None:
        if not self.learning_rate >= 0:
            raise ArgumentError(f"learning_rate must be >= 0, got {self.learning_rate}.")
        if self.epochs < 1:
            raise ArgumentError(f"epochs must be >= 1, got {self.epochs}.")
        if self.batch_size < 1:
            raise ArgumentError(f"batch_size must be >= 1, got {self.batch_size}.")
        if self.loss_mode not in ("next_patch", "score", "joint"):
            raise ArgumentError(f"Unknown loss mode '{self.loss_mode}'.")
        if self.pretrain_epochs is not None and self.pretrain_epochs < 0:
            raise ArgumentError(f"pretrain_epochs must be >= 0, got {self.pretrain_epochs}.")
        if self.filter_penalty < 0:
            raise ArgumentError(f"filter_penalty must be >= 0, got {self.filter_penalty}.")
        if self.width < 1:
            raise ArgumentError(f"width must be >= 1, got {self.width}.")

    def schedule(self) -> List[Stage]:
        """Stage of every epoch, in order."""
        if self.loss_mode == "next_patch":
            return ["pretrain"] * self.epochs
        if self.loss_mode == "score":
            return ["finetune"] * self.epochs
        pre = self.epochs if self.pretrain_epochs is None else self.pretrain_epochs
        return ["pretrain"] * pre + ["finetune"] * self.epochs

    def loss_weights(self, stage: Stage) -> Tuple[float, float]:
        """(next-patch weight, score weight)."""
        if stage == "pretrain":
            return 1.0, 0.0
        if self.loss_mode == "joint":
            return JOINT_LOSS_WEIGHT, 1.0 - JOINT_LOSS_WEIGHT
        return 0.0, 1.0

    def updates_filters(self, stage: Stage) -> bool:
        if self.freeze_filters:
            return False
        return self.wavelet_trainable if stage == "pretrain" else True


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    stage: str
    loss: float


@dataclass
class TrainResult:
    params: PredictorParams
    filters: FilterPair
    trace: List[TraceRow] = field(default_factory=list)
    epochs_completed: int = 0


@dataclass(frozen=True)
class DaySample:
    day: int
    window_start: int
    target: np.ndarray  # B, already scaled


# -----------------------------
# One window
# -----------------------------
def window_objective(
    window: np.ndarray,
    target: Optional[np.ndarray],
    params: PredictorParams,
    filters: FilterPair,
    tokenizer: Tokenizer,
    weights: Tuple[float, float],
    boundaries: Optional[Boundaries] = None,
    window_start: int = 0,
    filter_grads: bool = True,
) -> Tuple[float, Dict[str, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """
    Loss of one B x M x L window and its gradients.

    next-patch part: per channel MSE of preds[:-1] against patches[1:], averaged
    over channels. score part: MSE between stock scores and target.
    Returns (loss, parameter grads, (grad_h, grad_g) shaped like the filters).
    """
    w_np, w_score = weights
    passes = run_window(window, params, filters, tokenizer, boundaries, window_start)
    B, M = len(passes), len(passes[0])
    n_channels = B * M

    loss = 0.0
    grad_preds: Dict[Tuple[int, int], np.ndarray] = {}
    grad_scores: Dict[Tuple[int, int], np.ndarray] = {}
    for b in range(B):
        for m in range(M):
            cp = passes[b][m]
            gp = np.zeros_like(cp.preds)
            if w_np > 0:
                if len(cp.positions) < 2:
                    raise ArgumentError("Next-patch training needs at least 2 patches per window.")
                loss += w_np * next_patch_loss(cp.preds[:-1], cp.patches[1:]) / n_channels
                gp[:-1] = w_np * next_patch_loss_grad(cp.preds[:-1], cp.patches[1:]) / n_channels
            grad_preds[(b, m)] = gp
            grad_scores[(b, m)] = np.zeros_like(cp.scores)

    if w_score > 0:
        if target is None or np.shape(target) != (B,):
            raise ArgumentError(f"Score training needs a target of shape ({B},).")
        scores = np.array([np.mean([cp.scores[-1] for cp in row]) for row in passes])
        resid = scores - target
        loss += w_score * float(np.mean(resid ** 2))
        d_scores = w_score * 2.0 * resid / B
        for b in range(B):
            for m in range(M):
                grad_scores[(b, m)][-1] = d_scores[b] / M

    grads = params.zeros_like()
    grad_h = np.zeros_like(filters.h)
    grad_g = np.zeros_like(filters.g)
    for b in range(B):
        for m in range(M):
            cp = passes[b][m]
            g, d_tokens = backward(cp.cache, params, grad_preds[(b, m)], grad_scores[(b, m)])
            for name, arr in g.items():
                grads[name] += arr
            if filter_grads:
                gh, gg = tokenize_channel_backward(cp.sequence, cp.positions, tokenizer,
                                                   filters.for_channel(m), d_tokens)
                if filters.shared:
                    grad_h += gh
                    grad_g += gg
                else:
                    grad_h[m] += gh
                    grad_g[m] += gg
    return loss, grads, (grad_h, grad_g)


# -----------------------------
# Samples
# -----------------------------
def day_samples(panel: StockPanel, labels: Optional[ReturnLabels], tokenizer: Tokenizer,
                label_scale: float) -> List[DaySample]:
    """
    Every day t with a full window and a next-day label: L-1 <= t <= T-2.
    """
    L = tokenizer.window_len
    T = len(panel.calendar)
    if L > T:
        raise DataError(f"Window length {L} exceeds the {T} available dates.")
    out = []
    for t in range(L - 1, T - 1):
        if labels is None:
            target = np.zeros(len(panel.symbols))
        else:
            target = labels.at(panel.calendar[t]) * label_scale
        out.append(DaySample(day=t, window_start=t - L + 1, target=np.asarray(target, dtype=float)))
    if not out:
        raise DataError(f"No day has both a full window of {L} dates and a next-day label.")
    return out


def _batches(samples: Sequence[DaySample], batch_size: int) -> List[Sequence[DaySample]]:
    return [samples[i:i + batch_size] for i in range(0, len(samples), batch_size)]


def _warn_degenerate(panel: StockPanel) -> None:
    flat = panel.values.std(axis=2) == 0
    if flat.all():
        logger.warning("Every training series is constant; training will not learn anything useful.")
    elif flat.any():
        logger.warning("%d of %d training series are constant.", int(flat.sum()), flat.size)


# -----------------------------
# Loop
# -----------------------------
def train(
    panel: StockPanel,
    labels: Optional[ReturnLabels],
    tokenizer: Tokenizer,
    filters: FilterPair,
    config: TrainConfig,
    library: Optional[PatternLibrary] = None,
    resume: Optional[TrainResult] = None,
) -> TrainResult:
    """
    Plain gradient descent over chronological batches of days.

    panel is the normalized training split; labels are its raw next-day returns.
    With a library each training window is segmented from its own days only
    (once, before the first epoch) and the boundaries join the stride grid.
    Training is deterministic given config.seed, so resuming from a result
    with epochs_completed = e reproduces epochs e+1.. of an uninterrupted run.
    """
    schedule = config.schedule()
    if any(s == "finetune" for s in schedule) and labels is None:
        raise DataError("Score training needs return labels.")
    _warn_degenerate(panel)
    tokenizer.check_filters(filters)
    if not filters.shared and filters.n_channels != panel.shape[1]:
        raise ArgumentError(f"Filters have {filters.n_channels} rows for {panel.shape[1]} features.")
    if resume is not None:
        params = resume.params.copy()
        filt = resume.filters.copy()
        trace = list(resume.trace)
        start = resume.epochs_completed
    else:
        params = PredictorParams.init(tokenizer.patch_len, tokenizer.levels, config.width, seed=config.seed)
        filt = filters.copy()
        trace = []
        start = 0
    if (params.patch_len, params.levels) != (tokenizer.patch_len, tokenizer.levels):
        raise ArgumentError("Checkpoint dimensions do not match the tokenizer.")

    samples = day_samples(panel, labels, tokenizer, config.label_scale)
    window_bounds: Dict[int, Boundaries] = {}
    if library is not None:
        window_bounds = {s.day: segment_window(panel.values, s.day, tokenizer.window_len, library)
                         for s in samples}
    batches = _batches(samples, config.batch_size)
    lr = config.learning_rate
    logger.info("Training on %d days in %d batches, %d epochs (starting at %d)",
                len(samples), len(batches), len(schedule), start)

    for epoch in range(start, len(schedule)):
        stage = schedule[epoch]
        weights = config.loss_weights(stage)
        update_filters = config.updates_filters(stage)
        batch_losses = []
        for batch in batches:
            loss = 0.0
            grads = params.zeros_like()
            grad_h = np.zeros_like(filt.h)
            grad_g = np.zeros_like(filt.g)
            for sample in batch:
                window = panel.values[:, :, sample.window_start:sample.day + 1]
                l, g, (gh, gg) = window_objective(
                    window, sample.target, params, filt, tokenizer, weights,
                    window_bounds.get(sample.day), sample.window_start, filter_grads=update_filters,
                )
                loss += l / len(batch)
                for name, arr in g.items():
                    grads[name] += arr / len(batch)
                grad_h += gh / len(batch)
                grad_g += gg / len(batch)
            if update_filters and config.filter_penalty > 0:
                loss += config.filter_penalty * filter_penalty(filt)
                ph, pg = filter_penalty_grad(filt)
                grad_h += config.filter_penalty * ph
                grad_g += config.filter_penalty * pg
            if not np.isfinite(loss):
                raise NumericError(f"Non-finite training loss at epoch {epoch + 1} ({stage}).")
            batch_losses.append(loss)

            for name in params.arrays:
                params.arrays[name] = params.arrays[name] - lr * grads[name]
            if update_filters:
                if not (np.isfinite(grad_h).all() and np.isfinite(grad_g).all()):
                    raise NumericError(f"Non-finite filter gradient at epoch {epoch + 1} ({stage}).")
                filt = FilterPair(filt.h - lr * grad_h, filt.g - lr * grad_g, filt.basis)

        epoch_loss = float(np.mean(batch_losses))
        trace.append(TraceRow(epoch=epoch + 1, stage=stage, loss=epoch_loss))
        logger.info("epoch %d (%s): loss=%.6g", epoch + 1, stage, epoch_loss)

    return TrainResult(params=params, filters=filt, trace=trace, epochs_completed=len(schedule))
