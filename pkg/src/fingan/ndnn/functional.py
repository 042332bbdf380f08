"""Forward/backward pairs for every op the networks use.

Arrays are float64 numpy arrays. Forward functions return ``(y, cache)``;
backward functions take that cache and the upstream gradient.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from fingan.errors import BatchTooSmall, NonFiniteError, NonPositiveSigma, ShapeMismatch

LOG_2PI = math.log(2.0 * math.pi)


def check_finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{what} produced non-finite values")
    return arr


# -- dense ---------------------------------------------------------------------

def dense_forward(W, b, x):
    if x.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeMismatch(f"dense expects (batch, {W.shape[0]}), got {x.shape}")
    y = x @ W + b
    return check_finite(y, "dense"), x


def dense_backward(cache, W, grad_out):
    x = cache
    return x.T @ grad_out, grad_out.sum(axis=0), grad_out @ W.T


# -- conv1d --------------------------------------------------------------------

def conv1d_out_len(length: int, k: int, stride: int, pad: int) -> int:
    return (length + 2 * pad - k) // stride + 1


def conv1d_forward(W, b, x, stride=1, pad=0):
    """Cross-correlation. ``W`` is (out_ch, in_ch, k); ``x`` is (batch, in_ch, len)."""
    out_ch, in_ch, k = W.shape
    if x.ndim != 3 or x.shape[1] != in_ch:
        raise ShapeMismatch(f"conv1d expects (batch, {in_ch}, len), got {x.shape}")
    bsz, _, length = x.shape
    if k > length + 2 * pad:
        raise ShapeMismatch(f"kernel {k} longer than padded input {length + 2 * pad}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    out_len = conv1d_out_len(length, k, stride, pad)
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride][:, :, :out_len]
    cols = win.transpose(0, 2, 1, 3).reshape(bsz * out_len, in_ch * k)
    y = cols @ W.reshape(out_ch, in_ch * k).T + b
    y = np.ascontiguousarray(y.reshape(bsz, out_len, out_ch).transpose(0, 2, 1))
    return check_finite(y, "conv1d"), (cols, x.shape, stride, pad)


def conv1d_backward(cache, W, grad_out):
    cols, (bsz, in_ch, length), stride, pad = cache
    out_ch, _, k = W.shape
    out_len = grad_out.shape[2]
    gm = grad_out.transpose(0, 2, 1).reshape(bsz * out_len, out_ch)
    dW = (gm.T @ cols).reshape(W.shape)
    db = gm.sum(axis=0)
    dcols = (gm @ W.reshape(out_ch, in_ch * k)).reshape(bsz, out_len, in_ch, k)
    dxp = np.zeros((bsz, in_ch, length + 2 * pad))
    span = stride * (out_len - 1) + 1
    for j in range(k):
        dxp[:, :, j:j + span:stride] += dcols[:, :, :, j].transpose(0, 2, 1)
    return dW, db, dxp[:, :, pad:pad + length]


# -- activations ---------------------------------------------------------------

def leaky_relu(x, slope=0.01):
    if 0 <= slope <= 1:
        return np.maximum(x, slope * x)
    return np.where(x > 0, x, slope * x)


def leaky_relu_backward(x, grad_out, slope=0.01):
    return grad_out * np.where(x > 0, 1.0, slope)


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(x, grad_out):
    return grad_out * (x > 0)


def sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid_backward(y, grad_out):
    return grad_out * y * (1.0 - y)


def softplus(x):
    # max(x, 0) + ln(1 + e^-|x|) never exponentiates a positive number
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softplus_backward(x, grad_out):
    return grad_out * sigmoid(x)


# -- batch normalization -------------------------------------------------------

def batchnorm_forward(gamma, beta, x, running_mean, running_var, mode="train", momentum=0.1, eps=1e-5):
    """Normalizes over the batch axis of (batch, features).

    In train mode ``running_mean``/``running_var`` are updated in place.
    """
    if x.ndim != 2 or x.shape[1] != gamma.shape[0]:
        raise ShapeMismatch(f"batchnorm expects (batch, {gamma.shape[0]}), got {x.shape}")
    if mode == "train":
        n = x.shape[0]
        if n < 2:
            raise BatchTooSmall("train-mode batch normalization needs at least 2 samples")
        mu = x.mean(axis=0)
        var = ((x - mu) ** 2).mean(axis=0)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * n / (n - 1)
    elif mode == "eval":
        mu, var = running_mean, running_var
    else:
        raise ValueError(f"unknown batchnorm mode {mode!r}")
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    y = gamma * xhat + beta
    return check_finite(y, "batchnorm"), (xhat, inv_std, mode)


def batchnorm_backward(cache, gamma, grad_out):
    xhat, inv_std, mode = cache
    dgamma = (grad_out * xhat).sum(axis=0)
    dbeta = grad_out.sum(axis=0)
    dxhat = grad_out * gamma
    if mode == "eval":
        return dgamma, dbeta, dxhat * inv_std
    n = grad_out.shape[0]
    dx = inv_std / n * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dgamma, dbeta, dx


# -- gaussian log-density ------------------------------------------------------

def gaussian_log_density(c, mu, sigma):
    """Sum over the last axis of log N(c_i | mu_i, sigma_i^2)."""
    if not (c.shape == mu.shape == sigma.shape):
        raise ShapeMismatch(f"shapes differ: {c.shape}, {mu.shape}, {sigma.shape}")
    if not (sigma > 0).all():
        raise NonPositiveSigma("sigma must be strictly positive")
    r = (c - mu) / sigma
    return (-0.5 * LOG_2PI - np.log(sigma) - 0.5 * r * r).sum(axis=-1)


def gaussian_log_density_backward(c, mu, sigma, grad_out):
    """Gradients w.r.t. (c, mu, sigma) given d loss / d log-density per row."""
    g = np.asarray(grad_out)[..., None]
    diff = c - mu
    inv_var = 1.0 / (sigma * sigma)
    d_mu = g * diff * inv_var
    d_sigma = g * (-1.0 / sigma + diff * diff * inv_var / sigma)
    return -d_mu, d_mu, d_sigma
