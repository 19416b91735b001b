"""Minimal dense/convolutional neural substrate on numpy arrays."""

from .checkpoint import arrays_to_bytes, bytes_to_arrays, load_arrays, save_arrays
from .gradcheck import default_input_shape, grad_check, grad_check_loss
from .layers import (
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    LayerSpec,
    MaxPool1D,
    MaxPool2D,
    NearestUpsample2D,
    Params,
    ReLU,
    Reshape,
    Sigmoid,
    backward,
    forward,
    init_params,
    output_shape,
)
from .losses import BCE_EPS, loss_bce, loss_mse
from .network import Sequential
from .optim import adam_step, sgd_step

__all__ = [
    "BCE_EPS",
    "Conv1D",
    "Conv2D",
    "Dense",
    "Flatten",
    "LayerSpec",
    "MaxPool1D",
    "MaxPool2D",
    "NearestUpsample2D",
    "Params",
    "ReLU",
    "Reshape",
    "Sequential",
    "Sigmoid",
    "adam_step",
    "arrays_to_bytes",
    "backward",
    "bytes_to_arrays",
    "default_input_shape",
    "forward",
    "grad_check",
    "grad_check_loss",
    "init_params",
    "load_arrays",
    "loss_bce",
    "loss_mse",
    "output_shape",
    "save_arrays",
    "sgd_step",
]
