"""LSTM forecaster of next-week price increments."""

from ledgertopo.forecaster.lstm import LSTMParams, gradient_check
from ledgertopo.forecaster.persistence import load_model, save_model
from ledgertopo.forecaster.training import (
    ModelConfig,
    Normalizer,
    SplitPlan,
    TrainedModel,
    lstm_predict,
    train,
)
from ledgertopo.forecaster.walk_forward import Prediction, walk_forward_predict

__all__ = [
    "LSTMParams",
    "ModelConfig",
    "Normalizer",
    "Prediction",
    "SplitPlan",
    "TrainedModel",
    "gradient_check",
    "load_model",
    "lstm_predict",
    "save_model",
    "train",
    "walk_forward_predict",
]
