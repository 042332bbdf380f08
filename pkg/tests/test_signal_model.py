import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fingan.errors import ConfigError, DimensionMismatch, ParseError, TooFewRps, ZeroDistance
from fingan.signal_model import (
    EnvironmentSpec,
    FingerprintDataset,
    GridSpec,
    build_grid,
    generate_dataset,
    load_csv,
    mean_rss,
    hall_environment,
    save_csv,
    simulate_rss,
    split_by_rp,
)


def single_ru_env(**kw):
    base = dict(ru_positions=((0.0, 0.0),), path_loss_exponent=2.0, reference_power=0.0, noise_sigma=0.0)
    base.update(kw)
    return EnvironmentSpec(**base)


class TestGrid:
    def test_single_cell(self):
        np.testing.assert_array_equal(build_grid(GridSpec(1, 1, 2.0)), [[1.0, 1.0]])

    def test_row_major_centers(self):
        pts = build_grid(GridSpec(2, 3, 1.0))
        assert pts.shape == (6, 2)
        np.testing.assert_array_equal(pts[0], [0.5, 0.5])
        np.testing.assert_array_equal(pts[1], [1.5, 0.5])
        np.testing.assert_array_equal(pts[-1], [2.5, 1.5])

    def test_hall_layout(self):
        env, grid = hall_environment()
        pts = build_grid(grid)
        assert len(pts) == 40
        assert env.num_rus == 6
        assert env.area == (30.0, 10.0)
        grid.check_inside(env)

    def test_outside_area_rejected(self):
        env, _ = hall_environment()
        with pytest.raises(ConfigError):
            GridSpec(5, 10, 2.5).check_inside(env)

    @pytest.mark.parametrize("kw", [dict(rows=0, cols=1, resolution=1.0), dict(rows=1, cols=1, resolution=0.0)])
    def test_invalid_grid(self, kw):
        with pytest.raises(ConfigError):
            GridSpec(**kw)


class TestSimulate:
    def test_unit_distance_is_reference_power(self):
        env = EnvironmentSpec(ru_positions=((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)), noise_sigma=0.0)
        np.testing.assert_array_equal(simulate_rss(env, (0.0, 0.0), 0), [0.0, 0.0, 0.0])

    def test_distance_e(self):
        env = single_ru_env()
        assert simulate_rss(env, (math.e, 0.0), 0)[0] == pytest.approx(-2.0, abs=1e-15)

    def test_db10_base(self):
        env = single_ru_env(log_base="db10", path_loss_exponent=3.0)
        assert simulate_rss(env, (10.0, 0.0), 0)[0] == pytest.approx(-30.0, abs=1e-12)

    def test_zero_distance(self):
        with pytest.raises(ZeroDistance):
            simulate_rss(single_ru_env(), (0.0, 0.0), 0)

    def test_monte_carlo_mean(self):
        # |mean - truth| < 3.5 sigma / sqrt(N)
        env = single_ru_env(noise_sigma=4.0)
        draws = simulate_rss(env, (3.0, 4.0), 123, n=10_000)
        truth = -2.0 * math.log(5.0)
        assert abs(draws.mean() - truth) < 3.5 * 4.0 / math.sqrt(10_000)
        assert abs(draws.mean() - truth) < 0.15

    def test_deterministic(self):
        env = single_ru_env(noise_sigma=4.0)
        np.testing.assert_array_equal(simulate_rss(env, (1.0, 2.0), 9), simulate_rss(env, (1.0, 2.0), 9))

    def test_env_validation(self):
        with pytest.raises(ConfigError):
            single_ru_env(path_loss_exponent=0.0)
        with pytest.raises(ConfigError):
            single_ru_env(noise_sigma=-1.0)
        with pytest.raises(ConfigError):
            EnvironmentSpec(ru_positions=())
        with pytest.raises(ConfigError):
            EnvironmentSpec(ru_positions=((math.inf, 0.0),))

    @given(st.floats(0.1, 50), st.floats(0.01, 20))
    def test_monotone_in_distance(self, d, extra):
        env = single_ru_env(path_loss_exponent=2.5)
        near = simulate_rss(env, (d, 0.0), 0)[0]
        far = simulate_rss(env, (d + extra, 0.0), 0)[0]
        assert far < near

    @settings(max_examples=50)
    @given(st.floats(-100, 100), st.floats(-100, 100))
    def test_translation_covariance(self, dx, dy):
        env, grid = hall_environment(noise_sigma=0.0)
        pts = build_grid(grid)
        moved = EnvironmentSpec(
            ru_positions=tuple((x + dx, y + dy) for x, y in env.ru_positions),
            path_loss_exponent=env.path_loss_exponent, reference_power=env.reference_power,
            noise_sigma=0.0, area=env.area, log_base=env.log_base,
        )
        np.testing.assert_allclose(mean_rss(moved, pts + [dx, dy]), mean_rss(env, pts), atol=1e-9)


class TestGenerateDataset:
    def test_counts(self):
        env, grid = hall_environment()
        ds = generate_dataset(env, build_grid(grid), 100, 0)
        assert len(ds) == 4000
        assert len(ds.unique_rps()) == 40

    def test_noiseless_identical(self):
        env, grid = hall_environment(noise_sigma=0.0)
        ds = generate_dataset(env, build_grid(grid)[:3], 5, 0)
        for _, idx in ds.rp_groups():
            assert (ds.rss[idx] == ds.rss[idx[0]]).all()

    def test_per_rp_std(self):
        # std of 1000 normal draws: relative sd ~ 1/sqrt(2*999) ~ 2.2%, so 10% is > 4 sd
        env, grid = hall_environment(noise_sigma=4.0)
        ds = generate_dataset(env, build_grid(grid)[:5], 1000, 3)
        for _, idx in ds.rp_groups():
            std = ds.rss[idx].std(axis=0, ddof=1)
            assert np.all(np.abs(std - 4.0) < 0.4)

    def test_seeded(self):
        env, grid = hall_environment()
        a = generate_dataset(env, build_grid(grid), 3, 11)
        b = generate_dataset(env, build_grid(grid), 3, 11)
        np.testing.assert_array_equal(a.rss, b.rss)

    def test_per_rp_streams_independent_of_order(self):
        env, grid = hall_environment()
        pts = build_grid(grid)
        full = generate_dataset(env, pts, 4, 5)
        first = generate_dataset(env, pts[:1], 4, 5)
        np.testing.assert_array_equal(full.rss[:4], first.rss)


class TestSplit:
    def make(self, n_rps=40, per=3):
        env, grid = hall_environment()
        return generate_dataset(env, build_grid(grid)[:n_rps], per, 0)

    def test_hall_split_counts(self):
        ds = split_by_rp(self.make(), (0.5, 0.375, 0.125), 0)
        counts = {s: len(ds.subset(s).unique_rps()) for s in ("train", "val", "test")}
        assert counts == {"train": 20, "val": 15, "test": 5}

    def test_all_train(self):
        ds = split_by_rp(self.make(), (1.0, 0.0, 0.0), 0)
        assert set(ds.split) == {"train"}

    def test_deterministic(self):
        a = split_by_rp(self.make(), (0.5, 0.375, 0.125), 4)
        b = split_by_rp(self.make(), (0.5, 0.375, 0.125), 4)
        assert a.split.tolist() == b.split.tolist()

    def test_too_few_rps(self):
        with pytest.raises(TooFewRps):
            split_by_rp(self.make(n_rps=2), (0.5, 0.25, 0.25), 0)

    def test_bad_fractions(self):
        with pytest.raises(ConfigError):
            split_by_rp(self.make(), (0.5, 0.5, 0.5), 0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(3, 40))
    def test_partition_property(self, seed, n_rps):
        ds = split_by_rp(self.make(n_rps=n_rps, per=2), (0.5, 0.3, 0.2), seed)
        seen = {}
        for rp, idx in ds.rp_groups():
            tags = set(ds.split[idx])
            assert len(tags) == 1
            seen[tuple(rp)] = tags.pop()
        assert len(seen) == n_rps


class TestCsv:
    def test_empty_body(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("x,y,rss_0,rss_1\n")
        ds = load_csv(p)
        assert len(ds) == 0 and ds.num_rus == 2

    def test_six_ru_header(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("x,y,rss_0,rss_1,rss_2,rss_3,rss_4,rss_5\n1,2,3,4,5,6,7,8\n")
        ds = load_csv(p)
        assert ds.num_rus == 6 and ds.split is None
        np.testing.assert_array_equal(ds.rss[0], [3, 4, 5, 6, 7, 8])

    def test_round_trip_bit_identical(self, tmp_path):
        env, grid = hall_environment()
        ds = split_by_rp(generate_dataset(env, build_grid(grid), 100, 0), (0.5, 0.375, 0.125), 0)
        p = tmp_path / "d.csv"
        save_csv(ds, p)
        back = load_csv(p)
        assert back.rss.tobytes() == ds.rss.tobytes()
        assert back.rps.tobytes() == ds.rps.tobytes()
        assert back.split.tolist() == ds.split.tolist()
        q = tmp_path / "d2.csv"
        save_csv(back, q)
        assert p.read_bytes() == q.read_bytes()

    def test_parse_error_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y,rss_0\n1,2,3\n1,zz,3\n")
        with pytest.raises(ParseError) as info:
            load_csv(p)
        assert info.value.line == 3

    def test_dimension_mismatch(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y,rss_0,rss_1\n1,2,3,4\n1,2,3\n")
        with pytest.raises(DimensionMismatch):
            load_csv(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y,rss_1\n")
        with pytest.raises(ParseError):
            load_csv(p)


def test_dataset_shape_checks():
    with pytest.raises(DimensionMismatch):
        FingerprintDataset(np.zeros((3, 2)), np.zeros((2, 4)))
