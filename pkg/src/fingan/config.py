"""Strict JSON run configuration shared by every CLI subcommand."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from fingan.errors import ConfigError
from fingan.evaluation.benchmark import BenchmarkSpec
from fingan.evaluation.localizers import LocalizerConfig
from fingan.gan.model import TrainConfig
from fingan.signal_model import EnvironmentSpec, GridSpec, hall_environment

SPLIT_KEYS = ("train", "val", "test")
BENCH_KEYS = ("train_sets", "localizers", "seeds", "test_set", "generated_metrics", "compare_lite")


@dataclass
class RunConfig:
    environment: EnvironmentSpec = field(default_factory=lambda: hall_environment()[0])
    grid: GridSpec = field(default_factory=lambda: hall_environment()[1])
    samples_per_rp: int = 200
    split: tuple = (0.5, 0.375, 0.125)
    train: TrainConfig = field(default_factory=TrainConfig)
    localizer: LocalizerConfig = field(default_factory=LocalizerConfig)
    benchmark: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0

    def benchmark_spec(self) -> BenchmarkSpec:
        """Benchmark protocol; without explicit ``seeds`` the run seed is used."""
        opts = {"seeds": [self.seed], **self.benchmark}
        return BenchmarkSpec(fingan=self.train, localizer=self.localizer, **opts)

    def to_dict(self) -> dict:
        env = asdict(self.environment)
        env["ru_positions"] = [list(p) for p in env["ru_positions"]]
        env["area"] = list(env["area"])
        grid = asdict(self.grid)
        grid["origin"] = list(grid["origin"])
        loc = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self.localizer).items()}
        return {
            "environment": env,
            "grid": grid,
            "samples_per_rp": self.samples_per_rp,
            "split": dict(zip(SPLIT_KEYS, self.split)),
            "train": asdict(self.train),
            "localizer": loc,
            "benchmark": self.benchmark,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def spec_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        raise ConfigError("must be an object", path)
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", f"{path}.{key}" if path else key)


def _build(cls, d, path, allowed=None):
    names = [f.name for f in fields(cls)]
    _check_keys(d, allowed or names, path)
    try:
        return cls(**d)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path) from exc


def _int(v, path, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError("must be an integer", path)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}", path)
    return v


def parse_config(d: dict) -> RunConfig:
    """Validate a decoded JSON object; missing sections take the defaults."""
    top = [f.name for f in fields(RunConfig)]
    _check_keys(d, top, "")
    cfg = RunConfig()
    if "environment" in d:
        cfg.environment = _build(EnvironmentSpec, d["environment"], "environment")
    if "grid" in d:
        cfg.grid = _build(GridSpec, d["grid"], "grid")
    cfg.grid.check_inside(cfg.environment)
    if "samples_per_rp" in d:
        cfg.samples_per_rp = _int(d["samples_per_rp"], "samples_per_rp", 1)
    if "split" in d:
        s = d["split"]
        _check_keys(s, SPLIT_KEYS, "split")
        vals = tuple(s.get(k, 0.0) for k in SPLIT_KEYS)
        for k, v in zip(SPLIT_KEYS, vals):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
                raise ConfigError("must be a non-negative number", f"split.{k}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise ConfigError(f"fractions sum to {sum(vals)}, expected 1", "split")
        cfg.split = vals
    if "train" in d:
        cfg.train = _build(TrainConfig, d["train"], "train")
    if "localizer" in d:
        loc = dict(d["localizer"]) if isinstance(d["localizer"], dict) else d["localizer"]
        if isinstance(loc, dict):
            for k in ("dnn_hidden", "cnn_filters"):
                if k in loc:
                    loc[k] = tuple(loc[k])
        cfg.localizer = _build(LocalizerConfig, loc, "localizer")
    if "benchmark" in d:
        _check_keys(d["benchmark"], BENCH_KEYS, "benchmark")
        cfg.benchmark = dict(d["benchmark"])
        try:
            cfg.benchmark_spec().validate()
        except Exception as exc:
            raise ConfigError(str(exc), "benchmark") from exc
    if "output_dir" in d:
        if not isinstance(d["output_dir"], str):
            raise ConfigError("must be a string", "output_dir")
        cfg.output_dir = d["output_dir"]
    if "seed" in d:
        cfg.seed = _int(d["seed"], "seed", 0)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc
    return parse_config(d)
