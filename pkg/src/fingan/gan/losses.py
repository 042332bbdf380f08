"""Adversarial and mutual-information losses.

Each function returns the scalar loss followed by its gradient(s) with
respect to the inputs, so callers can chain straight into backward passes.
"""

from __future__ import annotations

import numpy as np

from fingan.ndnn.functional import gaussian_log_density, gaussian_log_density_backward

LOG_CLAMP = 1e-12


def _clamped_log(p):
    """``log(max(p, eps))`` and its derivative (zero inside the clamp)."""
    safe = np.maximum(p, LOG_CLAMP)
    return np.log(safe), np.where(p > LOG_CLAMP, 1.0 / safe, 0.0)


def loss_adversarial_d(d_real, d_fake):
    """``-mean(log D(x|c)) - mean(log(1 - D(G(z|c)|c)))``."""
    d_real, d_fake = np.asarray(d_real, dtype=np.float64), np.asarray(d_fake, dtype=np.float64)
    log_r, dlog_r = _clamped_log(d_real)
    log_f, dlog_f = _clamped_log(1.0 - d_fake)
    loss = -log_r.mean() - log_f.mean()
    return float(loss), -dlog_r / d_real.size, dlog_f / d_fake.size


def loss_adversarial_g(d_fake):
    """Non-saturating generator loss ``-mean(log D(G(z|c)|c))``."""
    d_fake = np.asarray(d_fake, dtype=np.float64)
    log_f, dlog_f = _clamped_log(d_fake)
    return float(-log_f.mean()), -dlog_f / d_fake.size


def mutual_info_term(c_true, mu, sigma):
    """Batch mean of log Q(c|g) under the factored Gaussian ``(mu, sigma)``.

    Returns ``(L_m, d_mu, d_sigma)``. The entropy H(c) is a constant and
    is left out.
    """
    logq = gaussian_log_density(c_true, mu, sigma)
    n = logq.shape[0]
    _, d_mu, d_sigma = gaussian_log_density_backward(c_true, mu, sigma, np.full(n, 1.0 / n))
    return float(logq.mean()), d_mu, d_sigma
