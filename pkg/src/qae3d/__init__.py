"""Classically simulated, fully quantum auto-encoder for registered 3D point clouds."""
from .data import MotionDataset, NormalizationParams, SplitSpec, load_csv, synthesize_chain
from .estimators import ConstantBaseline, FullyConnectedAutoencoder, QuantumAutoencoder
from .experiment import TrainConfig, evaluate, train

__all__ = [
    "ConstantBaseline",
    "FullyConnectedAutoencoder",
    "MotionDataset",
    "NormalizationParams",
    "QuantumAutoencoder",
    "SplitSpec",
    "TrainConfig",
    "evaluate",
    "load_csv",
    "synthesize_chain",
    "train",
]

__version__ = "0.1.0"
