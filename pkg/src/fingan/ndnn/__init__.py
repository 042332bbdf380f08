"""Small deterministic float64 neural-network engine with hand-written backward passes."""

from fingan.ndnn.functional import (
    batchnorm_backward,
    batchnorm_forward,
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    gaussian_log_density,
    gaussian_log_density_backward,
    leaky_relu,
    relu,
    sigmoid,
    softplus,
)
from fingan.ndnn.gradcheck import check_layers, grad_check
from fingan.ndnn.layers import (
    BatchNorm1d,
    Conv1d,
    Dense,
    Flatten,
    LeakyReLU,
    ReLU,
    Sequential,
    Sigmoid,
    Softplus,
)
from fingan.ndnn.optim import Adam, AdamState, adam_step

__all__ = [
    "Adam", "AdamState", "BatchNorm1d", "Conv1d", "Dense", "Flatten", "LeakyReLU", "ReLU",
    "Sequential", "Sigmoid", "Softplus", "adam_step", "batchnorm_backward", "batchnorm_forward",
    "check_layers", "conv1d_backward", "conv1d_forward", "dense_backward", "dense_forward",
    "gaussian_log_density", "gaussian_log_density_backward", "grad_check", "leaky_relu", "relu",
    "sigmoid", "softplus",
]
