"""Per-RP statistics, RSS error and Fréchet Distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fingan.errors import NotSymmetric, NumericError, RpSetMismatch
from fingan.signal_model import RP_MATCH_TOL, FingerprintDataset

EPS_REG = 1e-6


@dataclass
class RpStats:
    rp: np.ndarray
    mu: np.ndarray
    sigma_mat: np.ndarray
    count: int


def _stats(x: np.ndarray, rp, eps_reg=EPS_REG) -> RpStats:
    mu = x.mean(axis=0)
    if len(x) < 2:
        cov = eps_reg * np.eye(x.shape[1])
    else:
        d = x - mu
        cov = d.T @ d / (len(x) - 1)
        cov = 0.5 * (cov + cov.T)
    return RpStats(np.asarray(rp, dtype=np.float64), mu, cov, len(x))


def per_rp_stats(ds: FingerprintDataset, eps_reg=EPS_REG, transform=None) -> list[RpStats]:
    """Sample mean and unbiased covariance at every RP, in first-appearance order.

    ``transform`` (e.g. a standardizer) is applied to the RSS rows first.
    An RP with a single sample gets ``eps_reg * I`` as its covariance.
    """
    x = ds.rss if transform is None else transform(ds.rss)
    return [_stats(x[idx], rp, eps_reg) for rp, idx in ds.rp_groups()]


def match_rps(real: list[RpStats], gen: list[RpStats], tol=RP_MATCH_TOL) -> list[tuple[RpStats, RpStats]]:
    if len(real) != len(gen):
        raise RpSetMismatch(f"{len(real)} real RPs vs {len(gen)} generated RPs")
    gen_rps = np.array([g.rp for g in gen]).reshape(-1, 2)
    pairs = []
    used = np.zeros(len(gen), dtype=bool)
    for r in real:
        d = np.abs(gen_rps - r.rp).max(axis=1)
        j = int(np.argmin(d)) if len(d) else -1
        if j < 0 or d[j] > tol or used[j]:
            raise RpSetMismatch(f"RP {tuple(r.rp)} has no generated counterpart")
        used[j] = True
        pairs.append((r, gen[j]))
    return pairs


def rss_error(real: FingerprintDataset, gen: FingerprintDataset):
    """Mean over RPs of the RMSE between per-RP mean RSS vectors.

    Returns ``(aggregate, per_rp)`` with ``per_rp`` a list of ``(rp, error)``.
    """
    pairs = match_rps(per_rp_stats(real), per_rp_stats(gen))
    per_rp = [(r.rp, float(np.sqrt(np.mean((r.mu - g.mu) ** 2)))) for r, g in pairs]
    agg = float(np.mean([e for _, e in per_rp])) if per_rp else 0.0
    return agg, per_rp


def spd_sqrt(M, sym_tol=1e-10) -> np.ndarray:
    """Principal square root of a symmetric positive semi-definite matrix."""
    M = np.asarray(M, dtype=np.float64)
    scale = max(1.0, float(np.abs(M).max()) if M.size else 1.0)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or np.abs(M - M.T).max() > sym_tol * scale:
        raise NotSymmetric("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if w.size and w.min() < -1e-10 * scale:
        raise NumericError(f"matrix is not positive semi-definite (eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def frechet_gaussian(mu1, s1, mu2, s2) -> float:
    """``|mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)``."""
    r1 = spd_sqrt(s1)
    inner = r1 @ s2 @ r1
    cross = spd_sqrt(0.5 * (inner + inner.T))
    diff = np.asarray(mu1) - np.asarray(mu2)
    return float(diff @ diff + np.trace(s1) + np.trace(s2) - 2.0 * np.trace(cross))


def frechet_distance(real: FingerprintDataset, gen: FingerprintDataset, standardizer=None, eps_reg=EPS_REG):
    """Average per-RP Fréchet Distance on standardized RSS.

    ``standardizer`` should be fitted on the training split; None compares
    raw values. Returns ``(aggregate, per_rp)``.
    """
    transform = None if standardizer is None else standardizer.rss
    pairs = match_rps(per_rp_stats(real, eps_reg, transform), per_rp_stats(gen, eps_reg, transform))
    per_rp = [(r.rp, max(frechet_gaussian(r.mu, r.sigma_mat, g.mu, g.sigma_mat), 0.0)) for r, g in pairs]
    agg = float(np.mean([v for _, v in per_rp])) if per_rp else 0.0
    return agg, per_rp
