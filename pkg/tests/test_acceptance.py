"""Acceptance criteria, one test per criterion, each with its runtime budget.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``;
either way one PASS/FAIL line per criterion is printed at the end.
"""

import math
import sys
import time

import pytest

from ntk_spectrum.bounds import BoundConstants
from ntk_spectrum.experiments import (
    check_deep_concentration, check_deep_decomposition, check_flip_rate, check_funk_hecke_audit,
    check_gram_guarantee, check_mercer, check_monte_carlo, check_separation_scaling,
    check_shallow_bracket,
)

SEED = 1
THREADS = 4

# criterion id -> (description, passed, detail); filled as tests run
RESULTS: dict = {}


def _run(cid: str, label: str, budget_s: float, fn):
    start = time.perf_counter()
    res = fn()
    elapsed = time.perf_counter() - start
    ok = res.passed and elapsed < budget_s
    RESULTS[cid] = (label, ok, f"{elapsed:.1f}s of {budget_s:.0f}s; {res.summary_line}")
    assert res.passed, res.summary
    assert elapsed < budget_s, f"took {elapsed:.1f}s, budget {budget_s}s"


class _Res:
    """Adapter giving a check result a short one-line summary."""

    def __init__(self, check, keys):
        self.passed = check.passed
        self.summary = check.summary
        self.summary_line = ", ".join(f"{k}={_short(check.summary[k])}" for k in keys)


class _Many:
    def __init__(self, checks, line):
        self.passed = all(c.passed for c in checks)
        self.summary = [c.summary for c in checks]
        self.summary_line = line


def _short(v):
    return f"{v:.3g}" if isinstance(v, float) else str(v)


def test_c1_funk_hecke_audit():
    _run("C1", "Funk-Hecke audit", 30, lambda: _Res(
        check_funk_hecke_audit(range(3, 13), 30, 1e-8, threads=THREADS),
        ["max_abs_error", "parity_zeros_exact"]))


def test_c2_mercer_reconstruction():
    def fn():
        c = check_mercer([3], [1, 3, 5, 10, 20, 50, 100, 200], 1e-3)
        cells = [k for k in c.summary if k.startswith("d=")]
        line = ", ".join(f"{k} dev={c.summary[k]['final_deviation']:.2e} "
                         f"decreasing={c.summary[k]['decreasing']}" for k in cells)
        return _Many([c], line)
    _run("C2", "Mercer reconstruction", 10, fn)


def test_c3_monte_carlo():
    _run("C3", "Monte Carlo cross-check", 120, lambda: _Res(
        check_monte_carlo(SEED, [3, 5, 8], 8, 10**6, 4.0, 0.01, THREADS),
        ["failures", "entries", "failure_rate"]))


def test_c4_deep_decomposition():
    _run("C4", "Deep decomposition oracle", 300, lambda: _Res(
        check_deep_decomposition(SEED, [2, 3, 4], 50, 16, 6, 1e-5, 1e-4, THREADS),
        ["max_rel_error", "resampled"]))


def test_c5_shallow_bracket():
    _run("C5", "Shallow bracket", 600, lambda: _Res(
        check_shallow_bracket(SEED, 3, 8, 100, 0.1, BoundConstants(), 2**28, 200_000,
                              0.01, 100.0, 0.99, THREADS, validation_trials=400),
        ["c_low", "c_up", "violations", "validation_trials", "rate_upper", "capped_trials"]))


def test_c6_gram_guarantee():
    _run("C6", "Harmonic Gram guarantee", 120, lambda: _Res(
        check_gram_guarantee(SEED, [3, 4, 5], 16, 100, 1, 1.0, THREADS),
        ["failures", "instances"]))


def test_c7_separation_scaling():
    def fn():
        c = check_separation_scaling(SEED, [4, 6, 8], [32, 64, 128, 256, 512, 1024], 200, 0.25, THREADS)
        line = ", ".join(f"{k} slope={c.summary[k]['slope']:.3f}" for k in ("d0=4", "d0=6", "d0=8"))
        return _Many([c], line)
    _run("C7", "Separation scaling", 300, fn)


def test_c8_deep_concentration():
    def fn():
        c = check_deep_concentration(SEED, [[256, 128, 64]], 200, [math.exp(-1), math.e],
                                     [0.25, 4.0], 0.9, THREADS)
        return _Many([c], f"pass_fraction={c.summary['256x128x64']['pass_fraction']:.3f}")
    _run("C8", "Deep concentration", 300, fn)


def test_c9_flip_rate():
    _run("C9", "Flip-rate identity", 10, lambda: _Res(
        check_flip_rate(SEED, [math.pi / 6, math.pi / 4, math.pi / 2], 10**5, 3.0), ["samples"]))


def summary_lines() -> list[str]:
    lines = []
    for cid in sorted(RESULTS):
        label, ok, detail = RESULTS[cid]
        lines.append(f"{cid} {label}: {'PASS' if ok else 'FAIL'} ({detail})")
    return lines


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", *sys.argv[1:]])
    sys.exit(code)
