#!/usr/bin/env python3
"""Monte Carlo trend of the sampling-inequality failure rate versus lm.

For a fixed unit-norm family, draws `TRIALS` independent sample sets at
each size and reports how often the two-sided inequality fails, with
Wilson 95% intervals.  The lower-bound failure rate should fall to zero
as lm grows while the closed-form probability bound stays vacuous.
"""

import csv
import sys
from pathlib import Path

import numpy as np

import rksampling as rk
from rksampling.sampling_analysis import make_unit_family, wilson_interval
from rksampling.seeding import derive_seed

SIZES = [(5, 10), (10, 25), (25, 40), (50, 80)]  # lm = 50 .. 4000
TRIALS = 500
MU, DELTA = 0.5, 0.1
SEED = 20240817
OUT = Path(__file__).resolve().parent.parent / "out" / "trend"


def run():
    cube = rk.Cube(4.0, 4.0, 1)
    phi = rk.GeneratorPhi(1, rk.normalize_phi(1))
    kernel = rk.Kernel(phi, rk.default_lattice(cube))
    e = rk.Exponents(2.0, 2.0)
    grid = rk.Grid(cube.padded(1.0), 288, 288)
    family = make_unit_family(phi, kernel.lattice, grid, e, cube, count=25, singles=8, seed=1)
    coefs = np.stack([c.coefficients for c in family])
    tc = rk.compute_theory_constants(kernel, cube, e, delta=DELTA, resolution=64)
    D, p, q, n = tc.D, e.p, e.q, cube.n

    OUT.mkdir(parents=True, exist_ok=True)
    rows = []
    print(f"{'lm':>6} {'lower-fail':>12} {'wilson95':>18} {'tail_log':>12}")
    for l, m in SIZES:
        lower = (
            l ** (1 / p) * m ** (1 / q) * (1 - DELTA) ** (p * q) * D ** (1 - p * q)
            / (cube.R ** (n * p) * cube.S**q) * (1 - MU)
        )
        fails = 0
        for t in range(TRIALS):
            s = rk.draw_samples(cube, l, m, seed=derive_seed(SEED, l, m, t))
            idx, val = kernel.covering(s.flat_points)
            member = coefs[:, np.maximum(idx, 0)] * np.where(idx >= 0, val, 0.0)
            fails += bool((np.sqrt((member**2).sum(axis=1)) < lower).any())
        rate = fails / TRIALS
        ci = wilson_interval(fails, TRIALS)
        tail = rk.sampling_success_probability(l, m, cube, MU, DELTA, tc, e).tail_log
        print(f"{l * m:>6} {rate:>12.3f} [{ci[0]:.3f}, {ci[1]:.3f}]   {tail:>12.4g}")
        rows.append([l, m, l * m, fails, TRIALS, rate, ci[0], ci[1], tail])

    with open(OUT / "trend.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "m", "lm", "lower_failures", "trials", "rate", "wilson_lo", "wilson_hi", "tail_log"])
        w.writerows(rows)
    print(f"\nwrote {OUT / 'trend.csv'}")
    rates = [r[5] for r in rows]
    return 0 if all(a >= b for a, b in zip(rates, rates[1:])) else 1


if __name__ == "__main__":
    sys.exit(run())
