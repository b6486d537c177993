"""Learned floor-plan predictor: training and protocol serving."""

from .data import DatasetError, load_index, split_by_scene, threshold, to_bytes, to_unit
from .models import Completer, Denoiser, WIDTHS
from .serve import ModelBundle, PredictorServer, ProtocolError, serve
from .train import TrainConfig, TrainResult, load_net, train_completer, train_denoiser

__version__ = "0.1.0"

__all__ = [
    "Completer",
    "DatasetError",
    "Denoiser",
    "ModelBundle",
    "PredictorServer",
    "ProtocolError",
    "TrainConfig",
    "TrainResult",
    "WIDTHS",
    "load_index",
    "load_net",
    "serve",
    "split_by_scene",
    "threshold",
    "to_bytes",
    "to_unit",
    "train_completer",
    "train_denoiser",
]
