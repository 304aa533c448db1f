#!/usr/bin/env python3
"""Sweep tau and report the fitted exponents next to 2/(3 - tau)."""
import argparse
import json
import sys

from degenwave.cli import main


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default="configs/sample.json")
    p.add_argument("--out", default="out/sweep")
    p.add_argument("--tau", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    p.add_argument("--n-cells", type=int, default=32)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--t-final", type=float, default=2000.0)
    return p.parse_args(argv)


if __name__ == "__main__":
    a = parse_args()
    code = main(["sweep", "--config", a.config, "--out", a.out, "--grid", json.dumps({"tau": a.tau}),
                 "--n-cells", str(a.n_cells), "--dt", str(a.dt), "--t-final", str(a.t_final)])
    with open(f"{a.out}/sweep.csv") as fh:
        print(fh.read(), end="")
    sys.exit(code)
