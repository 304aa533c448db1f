#!/usr/bin/env python3
"""Lowest eigenvalue of the discrete energy form as the coupling grows.

A negative value means the energy is indefinite and the undamped dynamics
has an exponentially growing mode, so no energy plateau can form.
"""
import argparse
import math

import numpy as np
import scipy.linalg as sla

from degenwave.discretize import assemble, build_mesh, energy_form
from degenwave.model import ProblemConfig, check_condition_C, hardy_constant


def growth_rate(cfg: ProblemConfig, N: int) -> tuple[float, float]:
    m = assemble(cfg, build_mesh(N, m_a=cfg.m_a))
    q = np.linalg.eigvalsh(energy_form(m))
    nu, nv = m.Mu().shape[0], m.Mv().shape[0]
    K = energy_form(m)[: nu + nv, : nu + nv]
    M = sla.block_diag(m.Mu().toarray(), m.Mv().toarray())
    w = sla.eigh(K, M, eigvals_only=True)
    return float(q.min()), math.sqrt(-w.min()) if w.min() < 0 else 0.0


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--n-cells", type=int, default=64)
    a = p.parse_args(argv)
    prof = ProblemConfig.power(a.gamma, 0.0, 1.0, 0.5, 1.0, 1.0).profile
    print(f"gamma = {a.gamma:g}, Hardy-type constant {hardy_constant(prof):.6g}")
    print(f"{'alpha':>10} {'condition C':>12} {'min eig':>12} {'growth rate':>12}")
    for alpha in (0.1, 1.0, 5.0, 10.0, 1.5 * math.pi**2):
        cfg = ProblemConfig.power(a.gamma, alpha, 1.0, 0.5, 1.0, 1.0)
        rep = check_condition_C(alpha, a.gamma, K=10)
        qmin, rate = growth_rate(cfg, a.n_cells)
        print(f"{alpha:10.4f} {'holds' if rep.exact else 'violated':>12} {qmin:12.4e} {rate:12.4f}")


if __name__ == "__main__":
    main()
