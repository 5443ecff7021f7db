"""
A seeded verification sweep
===========================

Every experiment is reproducible from its configuration. Running one returns
a report that can be written as JSON or as long-format CSV with one row per
(check, cell, trial, quantity). The CSV feeds ``docs/plot_sweep.gp``.
"""

import sys

from ntk_spectrum.experiments import ExperimentConfig, run_experiment

config = ExperimentConfig.from_dict({
    "experiment": "separation-scaling",
    "seed": 7,
    "grid": {"d0": [4, 6], "n": [32, 64, 128, 256], "trials": 50},
})
report = run_experiment(config)
for check in report.checks:
    print(check.name, "PASS" if check.passed else "FAIL")
    for cell, info in check.summary.items():
        if isinstance(info, dict):
            print(f"  {cell}: slope {info['slope']:.3f} (target {info['target']:.3f})")

out = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
with open(out, "w") as fh:
    fh.write(report.to_csv())
print(f"wrote {out}")
