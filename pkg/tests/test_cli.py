import json

import numpy as np
import pytest

from fingan.cli import main
from fingan.config import RunConfig, parse_config
from fingan.errors import ConfigError
from fingan.signal_model import load_csv

TINY = {
    "environment": {"ru_positions": [[0, 0], [10, 0], [0, 10], [10, 10]], "noise_sigma": 2.0, "area": [10, 10]},
    "grid": {"rows": 2, "cols": 4, "resolution": 2.0, "origin": [2.0, 3.0]},
    "samples_per_rp": 8,
    "split": {"train": 0.5, "val": 0.25, "test": 0.25},
    "train": {"epochs": 1, "batch_size": 8},
    "localizer": {"epochs": 2},
    "benchmark": {"train_sets": ["G-T", "G-T+Gen-V"], "localizers": ["dnn", "knn"], "generated_metrics": ["Gen-V"]},
    "seed": 3,
}


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({**TINY, "output_dir": str(tmp_path / "out")}))
    return path


@pytest.fixture
def dataset(tmp_path, cfg_path):
    out = tmp_path / "data.csv"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
    return out


@pytest.fixture
def checkpoint(tmp_path, cfg_path, dataset):
    out = tmp_path / "model.json"
    assert main(["train", "--config", str(cfg_path), "--data", str(dataset), "--out", str(out)]) == 0
    return out


def test_default_config_is_the_hall_geometry(tmp_path):
    out = tmp_path / "d.csv"
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"samples_per_rp": 2}))
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    ds = load_csv(out)
    assert len(ds.unique_rps()) == 40 and ds.num_rus == 6
    counts = {s: len(ds.subset(s).unique_rps()) for s in ("train", "val", "test")}
    assert counts == {"train": 20, "val": 15, "test": 5}


def test_simulate_is_byte_identical(tmp_path, cfg_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", str(cfg_path), "--out", str(a)])
    main(["simulate", "--config", str(cfg_path), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["seed"] == 3 and len(manifest["spec_hash"]) == 64


def test_invalid_fraction_sum(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"split": {"train": 0.5, "val": 0.5, "test": 0.5}}))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 2
    assert "split" in capsys.readouterr().err


def test_unknown_key_reports_field_path():
    with pytest.raises(ConfigError) as info:
        parse_config({"train": {"epochs": 2, "epoch": 3}})
    assert info.value.path == "train.epoch"
    with pytest.raises(ConfigError) as info:
        parse_config({"environmnet": {}})
    assert info.value.path == "environmnet"


def test_config_round_trip():
    cfg = parse_config(TINY)
    again = parse_config(json.loads(cfg.to_json()))
    assert again.to_json() == cfg.to_json() and again.spec_hash() == cfg.spec_hash()
    assert RunConfig().spec_hash() != cfg.spec_hash()


def test_train_writes_checkpoint_and_losses(checkpoint):
    doc = json.loads(checkpoint.read_text())
    assert doc["format"] == "ndnn-ckpt-v1" and doc["fingan"]["variant"] == "full"
    lines = (checkpoint.parent / (checkpoint.name + ".loss.csv")).read_text().splitlines()
    assert lines[0] == "epoch,loss_d,loss_g,loss_mi" and len(lines) == 2


def test_train_lite_and_lambda_zero(tmp_path, cfg_path, dataset):
    lite, zero = tmp_path / "lite.json", tmp_path / "zero.json"
    assert main(["train", "--config", str(cfg_path), "--data", str(dataset), "--variant", "lite", "--out", str(lite)]) == 0
    assert main(["train", "--config", str(cfg_path), "--data", str(dataset), "--lambda", "0", "--out", str(zero)]) == 0
    assert "aux" not in json.loads(lite.read_text())["networks"]
    assert json.loads(zero.read_text())["fingan"]["lambda"] == 0.0


def test_generate_sources(tmp_path, cfg_path, dataset, checkpoint):
    val = tmp_path / "gen_v.csv"
    assert main(["generate", "--config", str(cfg_path), "--checkpoint", str(checkpoint), "--rps", "val-split",
                 "--data", str(dataset), "--n-per-rp", "5", "--out", str(val)]) == 0
    gen = load_csv(val)
    real_val = load_csv(dataset).subset("val")
    assert np.array_equal(gen.unique_rps(), real_val.unique_rps()) and len(gen) == 5 * len(gen.unique_rps())
    tr = tmp_path / "gen_t.csv"
    main(["generate", "--config", str(cfg_path), "--checkpoint", str(checkpoint), "--rps", "train-split",
          "--data", str(dataset), "--n-per-rp", "2", "--out", str(tr)])
    assert np.array_equal(load_csv(tr).unique_rps(), load_csv(dataset).subset("train").unique_rps())
    grid = tmp_path / "grid.csv"
    main(["generate", "--config", str(cfg_path), "--checkpoint", str(checkpoint), "--rps", "grid",
          "--n-per-rp", "1", "--out", str(grid)])
    assert len(load_csv(grid)) == 8
    via_csv = tmp_path / "via.csv"
    main(["generate", "--config", str(cfg_path), "--checkpoint", str(checkpoint), "--rps", "csv",
          "--rps-csv", str(val), "--n-per-rp", "5", "--out", str(via_csv)])
    assert via_csv.read_bytes() == val.read_bytes()


def test_generate_zero_gives_header_only(tmp_path, cfg_path, checkpoint):
    out = tmp_path / "empty.csv"
    assert main(["generate", "--config", str(cfg_path), "--checkpoint", str(checkpoint), "--rps", "grid",
                 "--n-per-rp", "0", "--out", str(out)]) == 0
    assert out.read_text().strip() == "x,y,rss_0,rss_1,rss_2,rss_3"


def test_bad_checkpoint_is_data_error(tmp_path, cfg_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "other"}')
    assert main(["generate", "--config", str(cfg_path), "--checkpoint", str(bad), "--rps", "grid",
                 "--out", str(tmp_path / "g.csv")]) == 3


def test_missing_dataset_is_data_error(tmp_path, cfg_path):
    assert main(["train", "--config", str(cfg_path), "--data", str(tmp_path / "nope.csv")]) == 3


def test_evaluate_with_svg(tmp_path, cfg_path, dataset, checkpoint, capsys):
    gen = tmp_path / "gen.csv"
    main(["generate", "--config", str(cfg_path), "--checkpoint", str(checkpoint), "--rps", "val-split",
          "--data", str(dataset), "--n-per-rp", "8", "--out", str(gen)])
    prefix = tmp_path / "eval"
    svg = tmp_path / "chart.svg"
    assert main(["evaluate", "--config", str(cfg_path), "--data", str(dataset), "--generated", str(gen),
                 "--checkpoint", str(checkpoint), "--localizer", "knn", "--svg", str(svg), "--out", str(prefix)]) == 0
    report = json.loads((tmp_path / "eval.json").read_text())
    metrics = {c["metric"] for c in report["cells"]}
    assert metrics == {"rss_error_dbm", "fd", "localization_rmse_m"}
    assert report["metadata"]["checkpoint_sha256"]
    assert svg.read_text().startswith("<svg")


def test_benchmark_grid_and_determinism(tmp_path, cfg_path, dataset, checkpoint):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    args = ["benchmark", "--config", str(cfg_path), "--data", str(dataset), "--checkpoint", f"full={checkpoint}"]
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    report = json.loads((tmp_path / "a.json").read_text())
    loc = [c for c in report["cells"] if c["metric"] == "localization_rmse_m"]
    assert len(loc) == 4
    assert len(report["metadata"]["checkpoint_sha256"]["full/seed3"]) == 64


def test_benchmark_seed_means(tmp_path, cfg_path, dataset, checkpoint):
    out = tmp_path / "s"
    assert main(["benchmark", "--config", str(cfg_path), "--data", str(dataset), "--seeds", "0", "1",
                 "--checkpoint", f"full={checkpoint}", "--out", str(out)]) == 0
    report = json.loads((tmp_path / "s.json").read_text())
    for row in report["summary"]:
        vals = [c["value"] for c in report["cells"] if (c["metric"], c["dataset"], c["localizer"]) ==
                (row["metric"], row["dataset"], row["localizer"])]
        assert len(vals) == 2 and abs(sum(vals) / 2 - row["mean"]) < 1e-12


def test_gradcheck_components(capsys):
    assert main(["gradcheck", "--component", "quadratic"]) == 0
    assert main(["gradcheck", "--component", "discriminator-loss", "--probes", "30"]) == 0
    assert main(["gradcheck", "--component", "cnn-localizer", "--probes", "30"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_gradcheck_corrupted_backward_fails_loudly(capsys):
    assert main(["gradcheck", "--component", "dnn-localizer", "--probes", "10", "--corrupt-backward"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_fingan_log_env(monkeypatch, tmp_path, cfg_path):
    monkeypatch.setenv("FINGAN_LOG", "nonsense-level")
    assert main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "d.csv")]) == 0
