"""Central finite-difference gradient checking."""

from __future__ import annotations

import numpy as np

# Gradients smaller than this are compared in absolute rather than relative terms.
REL_FLOOR = 1e-6


def relative_error(analytic, numeric, floor=REL_FLOOR):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _central(model_fn, p, idx, h, kink_retries):
    """Central difference at ``p[idx]``, shrinking ``h`` when the two
    one-sided slopes disagree (the step straddles a ReLU-type kink)."""
    orig = p[idx]
    f0 = float(model_fn()[0])
    for attempt in range(kink_retries + 1):
        p[idx] = orig + h
        f_plus = float(model_fn()[0])
        p[idx] = orig - h
        f_minus = float(model_fn()[0])
        p[idx] = orig
        right, left = (f_plus - f0) / h, (f0 - f_minus) / h
        if relative_error(right, left, floor=1e-4) < 1e-2 or attempt == kink_retries:
            return (f_plus - f_minus) / (2.0 * h)
        h /= 10.0


def grad_check(model_fn, params, probe_count=20, h=1e-5, rng=None, return_details=False, kink_retries=2):
    """Max relative error between analytic and central-difference gradients.

    ``model_fn()`` must return ``(loss, grads)`` where ``grads`` aligns with
    ``params``; ``params`` are perturbed in place and restored. Probes are
    drawn uniformly over all scalar entries. A probe whose left and right
    slopes disagree is retried with a 10x smaller step, at most
    ``kink_retries`` times.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    _, grads = model_fn()
    grads = [np.array(g, dtype=np.float64, copy=True) for g in grads]
    sizes = np.array([p.size for p in params])
    total = int(sizes.sum())
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    picks = rng.choice(total, size=min(probe_count, total), replace=False)
    details = []
    worst = 0.0
    for flat in np.sort(picks):
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        idx = np.unravel_index(int(flat - offsets[which]), params[which].shape)
        numeric = _central(model_fn, params[which], idx, h, kink_retries)
        analytic = float(grads[which][idx])
        err = relative_error(analytic, numeric)
        worst = max(worst, err)
        details.append((which, idx, analytic, numeric, err))
    return (worst, details) if return_details else worst


def check_layers(loss_fn, refs, probe_count=20, h=1e-5, rng=None, return_details=False, kink_retries=2):
    """:func:`grad_check` over ``(layer, name)`` references.

    ``loss_fn()`` runs forward + backward (with grads zeroed) and returns the
    scalar loss; gradients are read from ``layer.grads``.
    """
    params = [layer.params[n] for layer, n in refs]

    def model_fn():
        loss = loss_fn()
        return loss, [layer.grads[n] for layer, n in refs]

    return grad_check(model_fn, params, probe_count, h, rng, return_details, kink_retries)
