"""Path-loss RF environment, training grids, fingerprint datasets and CSV I/O.

RSS at an RP follows the log-distance model

    r_l = P0 - alpha * ln(d_l) + n,    n ~ N(0, sigma_n^2)

with ``log_base="db10"`` swapping ``ln`` for ``10 * log10``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from fingan import rng as rngmod
from fingan.errors import (
    ConfigError,
    DimensionMismatch,
    ParseError,
    TooFewRps,
    ZeroDistance,
)

SPLITS = ("train", "val", "test")
RP_MATCH_TOL = 1e-6


@dataclass(frozen=True)
class EnvironmentSpec:
    ru_positions: tuple[tuple[float, float], ...]
    path_loss_exponent: float = 2.0
    reference_power: float = 0.0
    noise_sigma: float = 4.0
    area: tuple[float, float] = (30.0, 10.0)
    log_base: str = "natural"

    def __post_init__(self):
        object.__setattr__(self, "ru_positions", tuple(tuple(float(v) for v in p) for p in self.ru_positions))
        object.__setattr__(self, "area", tuple(float(v) for v in self.area))
        if not self.ru_positions:
            raise ConfigError("at least one RU is required", "environment.ru_positions")
        for i, p in enumerate(self.ru_positions):
            if len(p) != 2 or not all(math.isfinite(v) for v in p):
                raise ConfigError("RU position must be a finite 2-D point", f"environment.ru_positions[{i}]")
        if not self.path_loss_exponent > 0:
            raise ConfigError("must be > 0", "environment.path_loss_exponent")
        if not self.noise_sigma >= 0:
            raise ConfigError("must be >= 0", "environment.noise_sigma")
        if len(self.area) != 2 or not all(v > 0 for v in self.area):
            raise ConfigError("area must be two positive extents", "environment.area")
        if self.log_base not in ("natural", "db10"):
            raise ConfigError("must be 'natural' or 'db10'", "environment.log_base")

    @property
    def num_rus(self) -> int:
        return len(self.ru_positions)

    def ru_array(self) -> np.ndarray:
        return np.asarray(self.ru_positions, dtype=np.float64)


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise ConfigError("rows and cols must be positive", "grid")
        if not self.resolution > 0:
            raise ConfigError("must be > 0", "grid.resolution")

    def check_inside(self, env: EnvironmentSpec) -> None:
        pts = build_grid(self)
        w, h = env.area
        if (pts[:, 0] < 0).any() or (pts[:, 0] > w).any() or (pts[:, 1] < 0).any() or (pts[:, 1] > h).any():
            raise ConfigError(f"grid centers fall outside the {w} x {h} area", "grid")


@dataclass(frozen=True)
class RssSample:
    rp: tuple[float, float]
    rss: np.ndarray


@dataclass
class FingerprintDataset:
    """Fingerprints stored column-wise: ``rps`` is (N, 2), ``rss`` is (N, num_rus).

    ``split`` is either None or an object array of ``"train"|"val"|"test"``.
    """

    rps: np.ndarray
    rss: np.ndarray
    split: np.ndarray | None = None
    num_rus: int = field(default=-1)

    def __post_init__(self):
        self.rps = np.asarray(self.rps, dtype=np.float64).reshape(-1, 2)
        if self.num_rus < 0:
            self.num_rus = int(np.asarray(self.rss).shape[-1]) if np.ndim(self.rss) == 2 else 0
        self.rss = np.asarray(self.rss, dtype=np.float64).reshape(-1, self.num_rus)
        if len(self.rps) != len(self.rss):
            raise DimensionMismatch(f"{len(self.rps)} RPs vs {len(self.rss)} RSS rows")
        if self.split is not None:
            self.split = np.asarray(self.split, dtype=object)
            if len(self.split) != len(self.rps):
                raise DimensionMismatch("split tags do not match the sample count")
            bad = set(self.split.tolist()) - set(SPLITS)
            if bad:
                raise ValueError(f"unknown split tags {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.rps)

    @property
    def samples(self) -> Iterator[RssSample]:
        for p, r in zip(self.rps, self.rss):
            yield RssSample((float(p[0]), float(p[1])), r)

    def unique_rps(self) -> np.ndarray:
        """Distinct RPs in order of first appearance."""
        keys, first = np.unique(_rp_keys(self.rps), axis=0, return_index=True)
        return self.rps[np.sort(first)]

    def rp_groups(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """``[(rp, sample_indices), ...]`` in first-appearance order."""
        keys = _rp_keys(self.rps)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        order = np.argsort(first, kind="stable")
        return [(self.rps[first[g]], np.flatnonzero(inverse == g)) for g in order]

    def subset(self, split: str) -> "FingerprintDataset":
        if self.split is None:
            raise ValueError("dataset carries no split tags")
        mask = self.split == split
        return FingerprintDataset(self.rps[mask], self.rss[mask], None, self.num_rus)

    def take(self, idx) -> "FingerprintDataset":
        split = None if self.split is None else self.split[idx]
        return FingerprintDataset(self.rps[idx], self.rss[idx], split, self.num_rus)

    def with_split(self, split) -> "FingerprintDataset":
        return FingerprintDataset(self.rps, self.rss, split, self.num_rus)


def _rp_keys(rps: np.ndarray) -> np.ndarray:
    return np.round(np.asarray(rps) / RP_MATCH_TOL).astype(np.int64)


def concat(datasets: Sequence[FingerprintDataset]) -> FingerprintDataset:
    """Concatenate datasets; split tags are dropped."""
    if not datasets:
        raise ValueError("nothing to concatenate")
    num_rus = datasets[0].num_rus
    for d in datasets:
        if d.num_rus != num_rus:
            raise DimensionMismatch(f"RU counts differ: {num_rus} vs {d.num_rus}")
    return FingerprintDataset(
        np.concatenate([d.rps for d in datasets]),
        np.concatenate([d.rss for d in datasets]),
        None,
        num_rus,
    )


def build_grid(spec: GridSpec) -> np.ndarray:
    """Cell centers of an L x W grid, row-major, shape (L*W, 2)."""
    ll, ww = np.meshgrid(np.arange(1, spec.rows + 1), np.arange(1, spec.cols + 1), indexing="ij")
    x = spec.origin[0] + (ww.ravel() - 0.5) * spec.resolution
    y = spec.origin[1] + (ll.ravel() - 0.5) * spec.resolution
    return np.stack([x, y], axis=1).astype(np.float64)


def mean_rss(env: EnvironmentSpec, rps) -> np.ndarray:
    """Noise-free RSS, shape (N, num_rus)."""
    rps = np.atleast_2d(np.asarray(rps, dtype=np.float64))
    d = np.linalg.norm(rps[:, None, :] - env.ru_array()[None, :, :], axis=2)
    if (d == 0).any():
        i, l = np.argwhere(d == 0)[0]
        raise ZeroDistance(f"RP {tuple(rps[i])} coincides with RU {l}")
    if env.log_base == "natural":
        loss = env.path_loss_exponent * np.log(d)
    else:
        loss = 10.0 * env.path_loss_exponent * np.log10(d)
    return env.reference_power - loss


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_rss(env: EnvironmentSpec, rp, rng_seed=None, n: int | None = None) -> np.ndarray:
    """One RSS vector per RU at ``rp`` (or an (n, L) block when ``n`` is given)."""
    mu = mean_rss(env, rp)[0]
    gen = _as_generator(rng_seed)
    shape = (env.num_rus,) if n is None else (n, env.num_rus)
    if env.noise_sigma == 0:
        return np.broadcast_to(mu, shape).copy()
    return mu + env.noise_sigma * gen.standard_normal(shape)


def generate_dataset(env: EnvironmentSpec, grid_points, samples_per_rp: int, rng_seed: int) -> FingerprintDataset:
    """Simulate ``samples_per_rp`` fingerprints at every point.

    RP ``i`` draws from its own ``(rng_seed, "simulate/rp/i")`` stream.
    """
    if samples_per_rp < 1:
        raise ValueError("samples_per_rp must be >= 1")
    pts = np.atleast_2d(np.asarray(grid_points, dtype=np.float64))
    blocks = [
        simulate_rss(env, p, rngmod.derive(rng_seed, f"simulate/rp/{i}"), n=samples_per_rp)
        for i, p in enumerate(pts)
    ]
    rss = np.concatenate(blocks) if blocks else np.zeros((0, env.num_rus))
    rps = np.repeat(pts, samples_per_rp, axis=0)
    return FingerprintDataset(rps, rss, None, env.num_rus)


def split_counts(num_rps: int, fractions) -> tuple[int, int, int]:
    n_val = int(math.floor(fractions[1] * num_rps + 0.5))
    n_test = int(math.floor(fractions[2] * num_rps + 0.5))
    n_train = num_rps - n_val - n_test
    if n_train < 0:
        raise ValueError(f"fractions {fractions} over-allocate {num_rps} RPs")
    return n_train, n_val, n_test


def split_by_rp(ds: FingerprintDataset, fractions=(0.5, 0.375, 0.125), rng_seed: int = 0) -> FingerprintDataset:
    """Tag every sample train/val/test so that each RP lands in exactly one split.

    Val and test counts are rounded from the fractions; the remainder goes
    to train.
    """
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ConfigError(f"fractions must be three non-negative values summing to 1, got {fractions}", "split")
    groups = ds.rp_groups()
    if len(groups) < 3:
        raise TooFewRps(f"need at least 3 distinct RPs, have {len(groups)}")
    n_train, n_val, _ = split_counts(len(groups), fractions)
    order = rngmod.derive(rng_seed, "split").permutation(len(groups))
    tags = np.empty(len(ds), dtype=object)
    for rank, g in enumerate(order):
        tag = "train" if rank < n_train else "val" if rank < n_train + n_val else "test"
        tags[groups[g][1]] = tag
    return ds.with_split(tags)


def save_csv(ds: FingerprintDataset, path) -> None:
    header = ["x", "y"] + [f"rss_{i}" for i in range(ds.num_rus)]
    if ds.split is not None:
        header.append("split")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(ds)):
            row = [format(v, ".17g") for v in ds.rps[i]] + [format(v, ".17g") for v in ds.rss[i]]
            if ds.split is not None:
                row.append(ds.split[i])
            fh.write(",".join(row) + "\n")


def load_csv(path) -> FingerprintDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header", 1) from None
        has_split = bool(header) and header[-1] == "split"
        rss_cols = header[2:-1] if has_split else header[2:]
        if header[:2] != ["x", "y"] or rss_cols != [f"rss_{i}" for i in range(len(rss_cols))]:
            raise ParseError(f"bad header {header!r}", 1)
        num_rus = len(rss_cols)
        width = len(header)
        rps, rss, split = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DimensionMismatch(f"line {lineno}: expected {width} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row[: 2 + num_rus]]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", lineno)
            rps.append(vals[:2])
            rss.append(vals[2:])
            if has_split:
                if row[-1] not in SPLITS:
                    raise ParseError(f"unknown split tag {row[-1]!r}", lineno)
                split.append(row[-1])
    return FingerprintDataset(
        np.asarray(rps, dtype=np.float64).reshape(-1, 2),
        np.asarray(rss, dtype=np.float64).reshape(-1, num_rus),
        np.asarray(split, dtype=object) if has_split else None,
        num_rus,
    )


def hall_environment(noise_sigma: float = 4.0, log_base: str = "db10", path_loss_exponent: float = 3.0,
                      reference_power: float = -30.0) -> tuple[EnvironmentSpec, GridSpec]:
    """30 m x 10 m hall, 6 wall-mounted RUs, 40 RPs on a 4 x 10 grid of 2.5 m cells."""
    env = EnvironmentSpec(
        ru_positions=((0.0, 0.0), (15.0, 0.0), (30.0, 0.0), (0.0, 10.0), (15.0, 10.0), (30.0, 10.0)),
        path_loss_exponent=path_loss_exponent,
        reference_power=reference_power,
        noise_sigma=noise_sigma,
        area=(30.0, 10.0),
        log_base=log_base,
    )
    grid = GridSpec(rows=4, cols=10, resolution=2.5, origin=(2.5, 0.0))
    return env, grid
