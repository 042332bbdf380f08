"""``fingan`` command-line entry point.

Exit codes: 0 success, 1 failed gradient check, 2 config error, 3 data
error, 4 numeric divergence. ``FINGAN_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from fingan import __version__
from fingan.config import RunConfig, load_config
from fingan.diagnostics import COMPONENTS, THRESHOLD, component_check
from fingan.errors import BadCheckpoint, ConfigError, DataError, DivergenceDetected, NumericError, UnknownDataset
from fingan.evaluation.benchmark import EvalReport, run_benchmark, svg_bar_chart
from fingan.evaluation.localizers import localization_rmse, train_localizer
from fingan.evaluation.metrics import frechet_distance, rss_error
from fingan.gan.model import FinGanModel, history_csv
from fingan.gan.training import generate, train
from fingan.ndnn.checkpoint import digest
from fingan.signal_model import build_grid, generate_dataset, load_csv, save_csv, split_by_rp

log = logging.getLogger("fingan")

RP_SOURCES = ("val-split", "train-split", "test-split", "grid", "csv")
SPLIT_OF = {"val-split": "val", "train-split": "train", "test-split": "test"}


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _manifest(path, cfg: RunConfig, command, **extra):
    doc = {"command": command, "seed": cfg.seed, "spec_hash": cfg.spec_hash(), "version": __version__,
           "created_unix": int(time.time()), **extra}
    _write_text(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _out(args, cfg, default_name):
    return Path(args.out) if args.out else Path(cfg.output_dir) / default_name


def simulate_dataset(cfg: RunConfig):
    """Grid simulation followed by the RP-level split, all from ``cfg.seed``."""
    ds = generate_dataset(cfg.environment, build_grid(cfg.grid), cfg.samples_per_rp, cfg.seed)
    return split_by_rp(ds, cfg.split, cfg.seed)


def cmd_simulate(args):
    cfg = _config(args)
    out = _out(args, cfg, "dataset.csv")
    ds = simulate_dataset(cfg)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out)
    _manifest(str(out) + ".manifest.json", cfg, "simulate", dataset=str(out), rows=len(ds),
              config=cfg.to_dict())
    log.info("wrote %d fingerprints at %d RPs to %s", len(ds), len(ds.unique_rps()), out)
    return 0


def cmd_train(args):
    cfg = _config(args)
    tc = replace(cfg.train, seed=cfg.seed)
    if args.variant:
        tc = replace(tc, variant=args.variant)
    if args.lam is not None:
        tc = replace(tc, lam=args.lam)
    if args.epochs is not None:
        tc = replace(tc, epochs=args.epochs)
    if args.batch_size is not None:
        tc = replace(tc, batch_size=args.batch_size)
    ds = load_csv(args.data)
    if ds.split is not None:
        ds = ds.subset("train")
    out = _out(args, cfg, f"fingan-{tc.variant}.ckpt.json")

    def progress(h):
        log.info("epoch %d loss_d=%.4f loss_g=%.4f loss_mi=%.4f", h["epoch"], h["loss_d"], h["loss_g"], h["loss_mi"])

    model = train(ds, tc, progress=progress)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    _write_text(str(out) + ".loss.csv", history_csv(model.history))
    _manifest(str(out) + ".manifest.json", cfg, "train", checkpoint=str(out),
              checkpoint_sha256=digest(model.to_json()), train_config=tc.__dict__, data=str(args.data))
    log.info("wrote checkpoint %s", out)
    return 0


def _source_rps(args, cfg):
    if args.rps in SPLIT_OF:
        if not args.data:
            raise ConfigError("--rps split sources need --data", "rps")
        ds = load_csv(args.data)
        if ds.split is None:
            raise DataError(f"{args.data} has no split column")
        return ds.subset(SPLIT_OF[args.rps]).unique_rps()
    if args.rps == "grid":
        return build_grid(cfg.grid)
    if not args.rps_csv:
        raise ConfigError("--rps csv needs --rps-csv", "rps")
    return load_csv(args.rps_csv).unique_rps()


def cmd_generate(args):
    cfg = _config(args)
    model = FinGanModel.load(args.checkpoint)
    rps = _source_rps(args, cfg)
    ds = generate(model, rps, args.n_per_rp, cfg.seed)
    out = _out(args, cfg, "generated.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out)
    _manifest(str(out) + ".manifest.json", cfg, "generate", rp_source=args.rps, n_per_rp=args.n_per_rp,
              checkpoint_sha256=digest(Path(args.checkpoint).read_text()))
    log.info("wrote %d generated fingerprints to %s", len(ds), out)
    return 0


def _write_report(report: EvalReport, prefix):
    _write_text(str(prefix) + ".json", report.to_json() + "\n")
    _write_text(str(prefix) + ".csv", report.to_csv())


def cmd_evaluate(args):
    """RSS error / FD of a generated set against its real counterpart, plus
    optional localization RMSE of localizers trained on the generated set."""
    cfg = _config(args)
    real_all = load_csv(args.data)
    real = real_all.subset(args.split) if real_all.split is not None else real_all
    gen = load_csv(args.generated)
    std = None
    meta = {"data": str(args.data), "generated": str(args.generated), "split": args.split, "seeds": [cfg.seed]}
    if args.checkpoint:
        std = FinGanModel.load(args.checkpoint).standardizer
        meta["checkpoint_sha256"] = digest(Path(args.checkpoint).read_text())
    report = EvalReport(metadata=meta)
    name = args.name
    err, err_rp = rss_error(real, gen)
    fd, fd_rp = frechet_distance(real, gen, std)
    report.add("rss_error_dbm", name, "", cfg.seed, err)
    report.add("fd", name, "", cfg.seed, fd)
    for (rp, e), (_, f) in zip(err_rp, fd_rp):
        report.per_rp.append({"dataset": name, "seed": cfg.seed, "rp": [float(rp[0]), float(rp[1])],
                              "rss_error_dbm": e, "fd": f})
    if args.localizer and real_all.split is not None:
        test = real_all.subset("test")
        for kind in args.localizer:
            model = train_localizer(kind, gen, replace(cfg.localizer, seed=cfg.seed))
            report.add("localization_rmse_m", name, kind, cfg.seed, localization_rmse(model, test))
    prefix = Path(args.out) if args.out else Path(cfg.output_dir) / "evaluation"
    _write_report(report, prefix)
    if args.svg:
        _write_text(args.svg, svg_bar_chart(real, gen, title=f"{name} vs ground truth"))
    print(json.dumps(report.summary(), indent=1))
    return 0


def cmd_benchmark(args):
    cfg = _config(args)
    spec = cfg.benchmark_spec()
    if args.seeds:
        spec.seeds = args.seeds
    ds = load_csv(args.data) if args.data else simulate_dataset(cfg)
    models = None
    if args.checkpoint:
        pre = {}
        for item in args.checkpoint:
            kind, _, path = item.partition("=")
            if kind not in ("full", "lite", "code_swap") or not path:
                raise ConfigError(f"expected KIND=PATH with KIND in full/lite/code_swap, got {item!r}", "checkpoint")
            pre[kind] = FinGanModel.load(path)
        models = {s: {k: m.copy() for k, m in pre.items()} for s in spec.seeds}

    def progress(name, loc, seed, value):
        log.info("seed %d %s %s rmse=%.4f m", seed, name, loc, value)

    report = run_benchmark(spec, ds, models, progress)
    report.metadata["spec_hash"] = cfg.spec_hash()
    prefix = Path(args.out) if args.out else Path(cfg.output_dir) / "benchmark"
    _write_report(report, prefix)
    print(json.dumps(report.summary(), indent=1))
    return 0


def cmd_gradcheck(args):
    worst = component_check(args.component, args.variant, args.probes, args.seed or 0,
                            corrupt=args.corrupt_backward)
    ok = worst < THRESHOLD
    print(f"{'PASS' if ok else 'FAIL'} {args.component} ({args.variant}) max relative error {worst:.3e}"
          f" over {args.probes} probes (threshold {THRESHOLD:g})")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="fingan", description="FinGAN fingerprint generation pipeline")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="root seed (overrides the config)")
        sp.add_argument("--out", help="output path")

    sp = sub.add_parser("simulate", help="simulate a split fingerprint dataset")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("train", help="train FinGAN on the training split")
    common(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--variant", choices=("full", "lite"))
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("generate", help="generate fingerprints from a checkpoint")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--rps", choices=RP_SOURCES, default="val-split")
    sp.add_argument("--data", help="split-tagged dataset for --rps *-split")
    sp.add_argument("--rps-csv", help="CSV whose RPs are used for --rps csv")
    sp.add_argument("--n-per-rp", type=int, default=100)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("evaluate", help="compare a generated dataset against ground truth")
    common(sp)
    sp.add_argument("--data", required=True, help="ground-truth dataset")
    sp.add_argument("--generated", required=True)
    sp.add_argument("--split", choices=("train", "val", "test"), default="val")
    sp.add_argument("--name", default="Gen-V")
    sp.add_argument("--checkpoint", help="checkpoint whose standardizer is used for FD")
    sp.add_argument("--localizer", nargs="*", choices=("dnn", "cnn", "knn"))
    sp.add_argument("--svg", help="write a per-RU mean comparison chart")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("benchmark", help="run the dataset x localizer x seed grid")
    common(sp)
    sp.add_argument("--data", help="split-tagged dataset (simulated from the config if omitted)")
    sp.add_argument("--seeds", type=int, nargs="+")
    sp.add_argument("--checkpoint", action="append", help="KIND=PATH pre-trained model")
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("gradcheck", help="finite-difference check of a training loss")
    sp.add_argument("--component", choices=COMPONENTS, required=True)
    sp.add_argument("--variant", choices=("full", "lite"), default="full")
    sp.add_argument("--probes", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--corrupt-backward", action="store_true", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("FINGAN_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceDetected as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    except (DataError, UnknownDataset, BadCheckpoint, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
