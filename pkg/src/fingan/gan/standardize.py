from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-6


@dataclass
class Standardizer:
    """Per-column affine maps for RSS and RP coordinates, fitted on training data only."""

    rss_mean: np.ndarray
    rss_std: np.ndarray
    rp_mean: np.ndarray
    rp_std: np.ndarray

    @classmethod
    def fit(cls, ds) -> "Standardizer":
        if len(ds) == 0:
            raise ValueError("cannot fit a standardizer on an empty dataset")
        return cls(
            ds.rss.mean(axis=0),
            np.maximum(ds.rss.std(axis=0), STD_FLOOR),
            ds.rps.mean(axis=0),
            np.maximum(ds.rps.std(axis=0), STD_FLOOR),
        )

    def rss(self, x):
        return (np.asarray(x, dtype=np.float64) - self.rss_mean) / self.rss_std

    def rss_inverse(self, x):
        return np.asarray(x, dtype=np.float64) * self.rss_std + self.rss_mean

    def rp(self, p):
        return (np.asarray(p, dtype=np.float64) - self.rp_mean) / self.rp_std

    def rp_inverse(self, p):
        return np.asarray(p, dtype=np.float64) * self.rp_std + self.rp_mean

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("rss_mean", "rss_std", "rp_mean", "rp_std")}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(*(np.asarray(d[k], dtype=np.float64) for k in ("rss_mean", "rss_std", "rp_mean", "rp_std")))
