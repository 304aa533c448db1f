#!/usr/bin/env python3
"""Simulate a configuration, fit the energy decay exponent and compare with 2/(3 - tau).

Example::

    python scripts/decay_experiment.py --config configs/sample.json --dt 0.01 --t-final 1e4
"""
import argparse
import sys

from degenwave.cli import main


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="configs/sample.json")
    p.add_argument("--out", default="out/decay")
    p.add_argument("--n-cells", type=int, default=128)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-final", type=float, default=1e4)
    p.add_argument("--window", type=float, nargs=2, default=(1e2, 1e4), metavar=("T_A", "T_B"))
    return p.parse_args(argv)


if __name__ == "__main__":
    a = parse_args()
    sys.exit(main(["fit", "--config", a.config, "--out", a.out, "--n-cells", str(a.n_cells),
                   "--dt", str(a.dt), "--t-final", str(a.t_final),
                   "--window", str(a.window[0]), str(a.window[1]), "--svg"]))
