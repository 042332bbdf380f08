"""Benchmark protocols over named dataset combinations, localizers and seeds.

Dataset names:

* ``G-T``, ``G-V``, ``G-Te`` - ground-truth train/val/test splits.
* ``Gen-V``, ``Gen-Te`` - FinGAN samples at the val/test RPs, matching the
  per-RP counts of their real counterparts.
* ``Gen-T`` - FinGAN samples at the training RPs, as many in total as G-V.
* ``Gen-R`` - like Gen-T, from a model conditioned on mean-RSS codes.
* any ``Gen-*`` name with a ``-lite`` suffix uses the lite variant.
* ``A+B`` - concatenation.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from fingan.errors import UnknownDataset
from fingan.evaluation.localizers import LocalizerConfig, localization_rmse, train_localizer
from fingan.evaluation.metrics import frechet_distance, rss_error
from fingan.gan.model import FinGanModel, TrainConfig
from fingan.gan.standardize import Standardizer
from fingan.gan.training import generate, make_code_swap_model, train
from fingan.ndnn.checkpoint import digest
from fingan.signal_model import FingerprintDataset, concat

log = logging.getLogger(__name__)

REAL_SETS = {"G-T": "train", "G-V": "val", "G-Te": "test"}
GEN_SETS = ("Gen-V", "Gen-Te", "Gen-T", "Gen-R")
REAL_COUNTERPART = {"Gen-V": "G-V", "Gen-Te": "G-Te", "Gen-T": "G-T", "Gen-R": "G-T"}
LOCALIZERS = ("dnn", "cnn", "knn")


@dataclass
class BenchmarkSpec:
    train_sets: list = field(default_factory=lambda: ["G-T", "G-T+G-V", "G-T+Gen-V", "G-V", "Gen-V"])
    localizers: list = field(default_factory=lambda: ["dnn"])
    seeds: list = field(default_factory=lambda: [0])
    test_set: str = "G-Te"
    generated_metrics: list = field(default_factory=lambda: ["Gen-V", "Gen-Te"])
    compare_lite: bool = False
    fingan: TrainConfig = field(default_factory=TrainConfig)
    localizer: LocalizerConfig = field(default_factory=LocalizerConfig)

    def validate(self):
        for name in self.train_sets + [self.test_set] + self.generated_metrics:
            for part in name.split("+"):
                parse_name(part)
        for loc in self.localizers:
            if loc not in LOCALIZERS:
                raise UnknownDataset(f"unknown localizer {loc!r}")
        for name in self.generated_metrics:
            if "+" in name or not name.startswith("Gen-"):
                raise UnknownDataset(f"generated metric target must be a single Gen-* set, got {name!r}")


def parse_name(name: str):
    """``(base, variant)`` for a single dataset name."""
    if name in REAL_SETS:
        return name, None
    base, variant = (name[:-5], "lite") if name.endswith("-lite") else (name, "full")
    if base not in GEN_SETS:
        raise UnknownDataset(f"unknown dataset {name!r}")
    return base, variant


@dataclass
class EvalReport:
    cells: list = field(default_factory=list)
    per_rp: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, metric, dataset, localizer, seed, value):
        self.cells.append({"metric": metric, "dataset": dataset, "localizer": localizer, "seed": seed,
                           "value": float(value)})

    def values(self, metric, dataset, localizer=""):
        return [c["value"] for c in self.cells
                if c["metric"] == metric and c["dataset"] == dataset and c["localizer"] == localizer]

    def mean(self, metric, dataset, localizer=""):
        vals = self.values(metric, dataset, localizer)
        if not vals:
            raise KeyError((metric, dataset, localizer))
        return float(np.mean(vals))

    def summary(self):
        keys = []
        for c in self.cells:
            k = (c["metric"], c["dataset"], c["localizer"])
            if k not in keys:
                keys.append(k)
        out = []
        for metric, ds, loc in keys:
            vals = self.values(metric, ds, loc)
            out.append({"metric": metric, "dataset": ds, "localizer": loc, "n": len(vals),
                        "mean": float(np.mean(vals)), "std": float(np.std(vals))})
        return out

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata, "summary": self.summary(), "cells": self.cells,
                           "per_rp": self.per_rp}, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "dataset", "localizer", "seed", "value"])
        for c in self.cells:
            w.writerow([c["metric"], c["dataset"], c["localizer"], c["seed"], repr(c["value"])])
        for s in self.summary():
            w.writerow([s["metric"], s["dataset"], s["localizer"], "mean", repr(s["mean"])])
        return buf.getvalue()


def generate_like(model, real: FingerprintDataset, seed: int) -> FingerprintDataset:
    """Generate at every RP of ``real`` with the same per-RP sample count."""
    parts = []
    for i, (rp, idx) in enumerate(real.rp_groups()):
        parts.append(generate(model, rp[None, :], len(idx), seed * 1_000_003 + i))
    return concat(parts) if parts else real.take(slice(0, 0))


def generate_spread(model, rps, total: int, seed: int) -> FingerprintDataset:
    """``total`` samples spread evenly over ``rps`` (remainder to the first RPs)."""
    base, extra = divmod(total, len(rps))
    parts = [generate(model, rp[None, :], base + (i < extra), seed * 1_000_003 + i) for i, rp in enumerate(rps)]
    return concat(parts)


class DatasetResolver:
    """Lazily builds real, generated and hybrid datasets for one seed.

    ``models`` may pre-supply trained models keyed by ``"full"``, ``"lite"``
    or ``"code_swap"``; missing ones are trained on G-T with ``fingan_config``.
    """

    def __init__(self, dataset: FingerprintDataset, seed: int, fingan_config: TrainConfig, models=None):
        if dataset.split is None:
            raise UnknownDataset("the ground-truth dataset carries no split tags")
        self.dataset = dataset
        self.seed = seed
        self.config = fingan_config
        self.models = dict(models or {})
        self.cache: dict[str, FingerprintDataset] = {}

    def real(self, name):
        if name not in self.cache:
            self.cache[name] = self.dataset.subset(REAL_SETS[name])
        return self.cache[name]

    def model(self, kind) -> FinGanModel:
        if kind not in self.models:
            gt = self.real("G-T")
            cfg = replace(self.config, seed=self.seed)
            if kind == "full":
                self.models[kind] = train(gt, replace(cfg, variant="full"))
            elif kind == "lite":
                self.models[kind] = train(gt, replace(cfg, variant="lite"))
            elif kind == "code_swap":
                fresh = FinGanModel.init(gt.num_rus, Standardizer.fit(gt), replace(cfg, variant="full"))
                self.models[kind] = train(gt, cfg, model=make_code_swap_model(fresh, gt))
            else:
                raise UnknownDataset(f"unknown model kind {kind!r}")
        return self.models[kind]

    def get(self, name: str) -> FingerprintDataset:
        if name in self.cache:
            return self.cache[name]
        if "+" in name:
            ds = concat([self.get(p) for p in name.split("+")])
        else:
            base, variant = parse_name(name)
            if variant is None:
                return self.real(name)
            kind = "code_swap" if base == "Gen-R" else variant
            if base == "Gen-R" and variant == "lite":
                raise UnknownDataset("Gen-R has no lite variant")
            model = self.model(kind)
            gen_seed = self.seed * 7 + {"Gen-V": 1, "Gen-Te": 2, "Gen-T": 3, "Gen-R": 4}[base]
            if base in ("Gen-V", "Gen-Te"):
                ds = generate_like(model, self.real(REAL_COUNTERPART[base]), gen_seed)
            else:
                ds = generate_spread(model, self.real("G-T").unique_rps(), len(self.real("G-V")), gen_seed)
        self.cache[name] = ds
        return ds


def run_benchmark(spec: BenchmarkSpec, dataset: FingerprintDataset, models_by_seed=None, progress=None) -> EvalReport:
    """Localization RMSE for every (train set, localizer, seed) plus RSS error / FD of generated sets.

    With ``compare_lite`` every generated set in ``train_sets`` and
    ``generated_metrics`` is also evaluated with its ``-lite`` twin.
    """
    spec.validate()
    report = EvalReport()
    train_sets = list(spec.train_sets)
    gen_targets = list(spec.generated_metrics)
    if spec.compare_lite:
        def lite(name):
            return "+".join(p + "-lite" if p.startswith("Gen-") and p != "Gen-R" and not p.endswith("-lite") else p
                            for p in name.split("+"))
        train_sets += [lite(n) for n in train_sets if lite(n) != n and lite(n) not in train_sets]
        gen_targets += [lite(n) for n in gen_targets if lite(n) != n and lite(n) not in gen_targets]

    hashes = {}
    for seed in spec.seeds:
        resolver = DatasetResolver(dataset, seed, spec.fingan, (models_by_seed or {}).get(seed))
        test = resolver.get(spec.test_set)
        for name in gen_targets:
            gen = resolver.get(name)
            real = resolver.get(REAL_COUNTERPART[parse_name(name)[0]])
            model = resolver.model("code_swap" if name.startswith("Gen-R") else parse_name(name)[1])
            err, err_rp = rss_error(real, gen)
            fd, fd_rp = frechet_distance(real, gen, model.standardizer)
            report.add("rss_error_dbm", name, "", seed, err)
            report.add("fd", name, "", seed, fd)
            for (rp, e), (_, f) in zip(err_rp, fd_rp):
                report.per_rp.append({"dataset": name, "seed": seed, "rp": [float(rp[0]), float(rp[1])],
                                      "rss_error_dbm": e, "fd": f})
        for name in train_sets:
            ds = resolver.get(name)
            for loc in spec.localizers:
                cfg = replace(spec.localizer, seed=seed)
                value = localization_rmse(train_localizer(loc, ds, cfg), test)
                report.add("localization_rmse_m", name, loc, seed, value)
                if progress:
                    progress(name, loc, seed, value)
        for kind, model in resolver.models.items():
            hashes[f"{kind}/seed{seed}"] = digest(model.to_json())
    report.metadata = {
        "train_sets": train_sets,
        "generated_metrics": gen_targets,
        "test_set": spec.test_set,
        "localizers": list(spec.localizers),
        "seeds": list(spec.seeds),
        "fingan_config": asdict(spec.fingan),
        "localizer_config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(spec.localizer).items()},
        "checkpoint_sha256": hashes,
        "dataset_samples": len(dataset),
    }
    return report


def svg_bar_chart(real: FingerprintDataset, gen: FingerprintDataset, max_rps=3, title="") -> str:
    """Grouped bars of per-RU mean RSS, ground truth vs generated, one panel per RP."""
    from fingan.evaluation.metrics import match_rps, per_rp_stats

    pairs = match_rps(per_rp_stats(real), per_rp_stats(gen))[:max_rps]
    num_rus = real.num_rus
    pw, ph, pad = 240, 180, 30
    width = pad + len(pairs) * (pw + pad)
    height = ph + 2 * pad + 20
    vals = [v for r, g in pairs for v in np.concatenate([r.mu, g.mu])]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    lo = min(lo, 0.0) if hi <= 0 else lo
    span = (hi - lo) or 1.0

    def ypix(v):
        return pad + 20 + ph * (hi - v) / span

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<text x="{pad}" y="16" font-size="12">{title}</text>']
    bw = pw / (num_rus * 2 + num_rus + 1)
    for p, (r, g) in enumerate(pairs):
        x0 = pad + p * (pw + pad)
        out.append(f'<text x="{x0}" y="{height - 6}" font-size="10">RP ({r.rp[0]:.2f}, {r.rp[1]:.2f})</text>')
        base = ypix(min(max(0.0, lo), hi))
        for ru in range(num_rus):
            for j, (v, colour) in enumerate(((r.mu[ru], "#4477aa"), (g.mu[ru], "#ee6677"))):
                x = x0 + bw * (1 + ru * 3 + j)
                y = ypix(v)
                top, h = min(y, base), abs(base - y)
                out.append(f'<rect x="{x:.2f}" y="{top:.2f}" width="{bw:.2f}" height="{h:.2f}" fill="{colour}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
