"""Minimal neural-network engine: dense, LSTM and dropout layers with Adam."""

from .adam import Adam
from .checkpoint import load_weights, save_weights
from .gradcheck import gradient_check, random_composition
from .layers import LSTM, Dense, Dropout, LastStep, Layer, Parallel
from .network import Network, build_network, mlp

__all__ = [
    "Adam",
    "Dense",
    "Dropout",
    "LSTM",
    "LastStep",
    "Layer",
    "Network",
    "Parallel",
    "build_network",
    "gradient_check",
    "load_weights",
    "mlp",
    "random_composition",
    "save_weights",
]
