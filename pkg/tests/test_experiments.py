import csv
import io
import json
import math

import numpy as np
import pytest

from ntk_spectrum.errors import ConfigError, DomainError
from ntk_spectrum.experiments import (
    CSV_HEADER, DEFAULT_GRIDS, ExperimentConfig, check_flip_rate, check_mercer, clopper_pearson,
    clopper_pearson_upper, derive_seed, fit_constant, mercer_deviation, run_experiment,
)
from ntk_spectrum.specfun import Activation


class TestFitConstant:
    def test_exact_multiple(self):
        fit = fit_constant([(1.0, 2.0), (3.0, 6.0), (0.5, 1.0)])
        assert fit.c == pytest.approx(2.0, rel=1e-14)
        assert fit.residual == pytest.approx(0.0, abs=1e-14)
        assert fit.count == 3

    def test_noisy(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            pred = rng.uniform(0.1, 10.0, 50)
            obs = pred * (1 + 0.1 * rng.standard_normal(50))
            assert 0.8 <= fit_constant(zip(pred, obs)).c <= 1.25

    def test_too_few(self):
        with pytest.raises(DomainError):
            fit_constant([(1.0, 1.0)])

    def test_non_positive(self):
        with pytest.raises(DomainError):
            fit_constant([(1.0, 1.0), (1.0, 0.0), (2.0, 2.0)])


class TestSeeds:
    def test_deterministic_and_distinct(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        seeds = {derive_seed(7, c, t) for c in range(10) for t in range(100)}
        assert len(seeds) == 1000
        assert all(0 <= s < 2**64 for s in seeds)

    def test_order_matters(self):
        assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


class TestConfig:
    def test_defaults_merged(self):
        cfg = ExperimentConfig.from_dict({"experiment": "funk-hecke-audit", "grid": {"r_max": 5}})
        assert cfg.grid["r_max"] == 5
        assert cfg.grid["d"] == DEFAULT_GRIDS["funk-hecke-audit"]["d"]

    @pytest.mark.parametrize("obj", [
        {"experiment": "nope"},
        {"seed": 1},
        {"experiment": "funk-hecke-audit", "grid": {"d": []}},
        {"experiment": "funk-hecke-audit", "grid": {"bogus": 1}},
        {"experiment": "funk-hecke-audit", "extra": 1},
        {"experiment": "separation-scaling", "trials": 0},
        {"experiment": "funk-hecke-audit", "eps": 1.5},
        {"experiment": "funk-hecke-audit", "seed": 2**64},
        {"experiment": "funk-hecke-audit", "threads": 0},
        {"experiment": "funk-hecke-audit", "constants": {"cap": -1}},
    ])
    def test_rejects(self, obj):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(obj)

    def test_trials_shortcut(self):
        cfg = ExperimentConfig.from_dict({"experiment": "separation-scaling", "trials": 5})
        assert cfg.grid["trials"] == 5


class TestChecks:
    def test_clopper_pearson_contains_rate(self):
        lo, hi = clopper_pearson(1, 50, 0.99)
        assert 0 < lo < 0.02 < hi < 0.2
        assert clopper_pearson(0, 50, 0.99)[0] == 0.0

    def test_one_sided_upper(self):
        # zero events: 1 - (1 - c)^(1/n)
        assert clopper_pearson_upper(0, 100, 0.99) == pytest.approx(1 - 0.01 ** (1 / 100), rel=1e-10)
        assert clopper_pearson_upper(5, 5, 0.99) == 1.0
        assert clopper_pearson_upper(8, 400, 0.99) < 0.05

    def test_mercer_deviation_shrinks(self):
        ts = np.linspace(-0.9, 0.9, 5)
        devs = [mercer_deviation(Activation.RELU_DERIVATIVE, 3, ts, R) for R in (1, 5, 25)]
        assert devs[0] > devs[1] > devs[2]

    def test_mercer_check_passes(self):
        assert check_mercer([3], [1, 5, 20, 200], 1e-3).passed

    def test_flip_rate_passes(self):
        res = check_flip_rate(3, [0.5, 1.5], 50_000, 4.0)
        assert res.passed and len(res.records) == 2


def small_config(threads=1, **extra):
    obj = {"experiment": "separation-scaling", "seed": 5, "threads": threads,
           "grid": {"d0": [4], "n": [16, 32, 64], "trials": 20, "rel_tol": 1.0}}
    obj.update(extra)
    return ExperimentConfig.from_dict(obj)


class TestReports:
    def test_csv_is_long_format(self):
        text = run_experiment(small_config()).to_csv()
        rows = list(csv.reader(io.StringIO(text)))
        assert tuple(rows[0]) == CSV_HEADER
        assert all(len(r) == len(CSV_HEADER) for r in rows)
        assert any(r[2] == "-1" for r in rows[1:])

    def test_csv_byte_identical_across_runs_and_threads(self):
        a = run_experiment(small_config()).to_csv()
        b = run_experiment(small_config()).to_csv()
        c = run_experiment(small_config(threads=4)).to_csv()
        assert a == b == c

    def test_json_schema(self):
        rep = run_experiment(ExperimentConfig.from_dict(
            {"experiment": "funk-hecke-audit", "grid": {"d": [3, 4], "r_max": 6}}))
        obj = json.loads(rep.to_json())
        assert obj["schema_version"] == 1
        assert obj["passed"] is True
        assert obj["metadata"]["wall_time_s"] >= 0
        assert math.isfinite(obj["checks"][0]["summary"]["max_abs_error"])
