#!/usr/bin/env python3
"""Print the real-part trends of both eigenvalue families and the matching constants."""
import argparse
import math

import numpy as np

from degenwave.model import ProblemConfig
from degenwave.spectrum import beta1_candidates, beta2_candidates, compute_spectrum


def report(cfg: ProblemConfig, k_range: tuple[int, int]) -> None:
    res = compute_spectrum(cfg, k_range)
    print(f"gamma={cfg.gamma:g} alpha={cfg.alpha:g} beta={cfg.beta:g} tau={cfg.tau:g} "
          f"omega={cfg.kernel.omega:g} rho={cfg.kernel.rho:g}  k in {k_range}")
    print(f"window counts: {sorted(set(res.counts.values()))}")
    for fam in (1, 2):
        k, tr = res.trend(fam)
        level = float(np.mean(tr))
        print(f"family {fam}: mean {level:.6e}, relative spread {(tr.max() - tr.min()) / level:.3%}")
        if cfg.tau < 1.0:
            cands = beta1_candidates(cfg) if fam == 1 else beta2_candidates(cfg)
            for name, v in cands.items():
                print(f"    candidate {name:>8}: {abs(v):.6e}  ratio {level / abs(v):.4f}")
    if cfg.tau == 1.0:
        lam = [e.lam for e in res.family(1)]
        print(f"family 1 real parts: {min(z.real for z in lam):.6f} .. {max(z.real for z in lam):.6f}"
              f"  (ln sqrt(1/3) = {math.log(math.sqrt(1 / 3)):.6f})")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k-min", type=int, default=30)
    p.add_argument("--k-max", type=int, default=60)
    a = p.parse_args(argv)
    report(ProblemConfig.power(0.5, 0.1, 1.0, 0.5, 1.0, 1.0), (a.k_min, a.k_max))
    print()
    report(ProblemConfig.power(0.0, 0.01, 1.0, 1.0, 0.0, 2.0), (a.k_min, a.k_max))


if __name__ == "__main__":
    main()
