# src/scalewave/model/__init__.py

from scalewave.model.predictor import (
    PredictorParams,
    Tokenizer,
    forward,
    next_patch_loss,
    predict_panel_scores,
    predict_scores,
    score_window,
)
from scalewave.model.training import TraceRow, TrainConfig, TrainResult, train

__all__ = [
    "PredictorParams",
    "Tokenizer",
    "TraceRow",
    "TrainConfig",
    "TrainResult",
    "forward",
    "next_patch_loss",
    "predict_panel_scores",
    "predict_scores",
    "score_window",
    "train",
]
