"""Acceptance suite: one test per criterion, one pass/fail line each.

Every expected value is either computed by an independent oracle inside
this module (double loops, mpmath re-evaluations, dense scans) or is a
structural property checked exactly.  Desk scale: n = 1 throughout.
"""

import csv
import json
import math
import time

import mpmath as mp
import numpy as np
import pytest

import rksampling as rk
from rksampling.cli import main as cli_main
from rksampling.mixed_norms import INF
from rksampling.reconstruction import build_partition, contraction_factor, error_certificate
from rksampling.sampling_analysis import make_unit_family
from rksampling.seeding import derive_seed

from conftest import desk_grid
from test_mixed_norms import loop_grid_norm, loop_seq_norm

mp.mp.dps = 60

RESULTS = []


def record(num, message):
    line = f"ACCEPTANCE {num:02d} PASS: {message}"
    RESULTS.append(line)
    print(line)


EXP_CHOICES = [1.0, 1.5, 2.0, 3.0, 5.0, INF]


def test_criterion_01_mixed_norm_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst_seq = worst_grid = 0.0
    for _ in range(150):
        l, m = rng.integers(1, 9, size=2)
        c = rng.standard_normal((l, m)) * 10 ** rng.uniform(-2, 2)
        p, q = rng.choice(EXP_CHOICES, size=2)
        got = rk.seq_mixed_norm(c, rk.Exponents(p, q))
        want = loop_seq_norm(c, p, q)
        worst_seq = max(worst_seq, abs(got - want) / max(want, 1e-300))
    for _ in range(50):
        cells = int(rng.integers(6, 25))
        g = rk.Grid(rk.Cube(float(rng.uniform(0.5, 4.0)), float(rng.uniform(0.5, 4.0)), 1), cells, cells)
        f = rk.GridSignal(g, rng.standard_normal(g.shape))
        p, q = rng.choice(EXP_CHOICES, size=2)
        got = rk.grid_mixed_norm(f, rk.Exponents(p, q))
        want = loop_grid_norm(f, p, q)
        worst_grid = max(worst_grid, abs(got - want) / max(want, 1e-300))
    took = time.time() - t0
    assert worst_seq <= 1e-12
    assert worst_grid <= 1e-9
    assert took < 10.0
    record(1, f"200 instances; seq rel err {worst_seq:.2e} <= 1e-12, grid {worst_grid:.2e} <= 1e-9, {took:.1f}s")


def test_criterion_02_pq_collapse():
    rng = np.random.default_rng(102)
    worst = 0.0
    for i in range(50):
        r = [1.0, 2.0, 5.0, INF][i % 4]
        e = rk.Exponents(r, r)
        if i % 2 == 0:
            c = rng.standard_normal((int(rng.integers(2, 8)), int(rng.integers(2, 8))))
            flat = np.abs(c).ravel()
            want = flat.max() if r == INF else (flat**r).sum() ** (1 / r)
            got = rk.seq_mixed_norm(c, e)
        else:
            cells = int(rng.integers(5, 20))
            g = rk.Grid(rk.Cube(2.0, 3.0, 1), cells, cells)
            f = rk.GridSignal(g, rng.standard_normal(g.shape))
            flat = np.abs(f.values).ravel()
            want = flat.max() if r == INF else ((flat**r).sum() * g.cell_volume) ** (1 / r)
            got = rk.grid_mixed_norm(f, e)
        worst = max(worst, abs(got - want) / max(want, 1e-300))
    assert worst <= 1e-12
    record(2, f"mixed norm equals the flat norm for r in {{1,2,5,inf}}; worst rel err {worst:.2e}")


def test_criterion_03_idempotency_ladder(desk_kernel, desk_lattice, e22):
    t0 = time.time()
    rng = np.random.default_rng(103)
    orders = []
    for _ in range(10):
        c = rk.CoeffSeq(desk_lattice, rng.standard_normal(len(desk_lattice)))
        residuals = []
        for cells in (192, 384, 768):  # h = 1/32, 1/64, 1/128 on extent 6
            g = desk_grid(cells)
            f = rk.synthesize(c, g, desk_kernel.phi)
            tf = rk.apply_T(desk_kernel, f)
            ttf = rk.apply_T(desk_kernel, tf)
            residuals.append(rk.grid_mixed_norm(ttf - tf, e22) / rk.grid_mixed_norm(tf, e22))
        assert residuals[0] > residuals[1] > residuals[2]
        orders.append(math.log2(residuals[0] / residuals[2]) / 2)
    took = time.time() - t0
    assert min(orders) >= 0.9
    assert took < 120.0
    record(3, f"relative T^2-T residual monotone over h=1/32,1/64,1/128; order {min(orders):.2f} >= 0.9, {took:.1f}s")


def test_criterion_04_analysis_synthesis_roundtrip(desk_kernel, desk_lattice):
    rng = np.random.default_rng(104)
    max_err_96 = 0.0
    orders = []
    for _ in range(20):
        coef = rng.standard_normal(len(desk_lattice))
        c = rk.CoeffSeq(desk_lattice, coef)
        errs = []
        for cells in (288, 576, 1152):  # h = 1/48, 1/96, 1/192
            g = desk_grid(cells)
            back = rk.analyze(desk_kernel, rk.synthesize(c, g, desk_kernel.phi))
            errs.append(np.abs(back.coefficients - coef).max())
        max_err_96 = max(max_err_96, errs[1])
        orders.append(math.log2(errs[0] / errs[2]) / 2)
    assert max_err_96 <= 5e-3
    assert min(orders) >= 1.8
    record(4, f"20 roundtrips: max-abs error {max_err_96:.2e} <= 5e-3 at h=1/96; order {min(orders):.2f} >= 1.8")


def test_criterion_05_reconstruction_convergence(desk_kernel, desk_lattice, desk_cube, e22, interior_mask):
    t0 = time.time()
    grid = desk_grid(576)  # h = 1/96
    samples = rk.grid_sample_set(desk_cube, 80, 80)
    rng = np.random.default_rng(105)
    coef = np.where(interior_mask, rng.standard_normal(len(desk_lattice)), 0.0)
    truth = rk.CoeffSeq(desk_lattice, coef)
    conc = rk.concentration_ratio(rk.synthesize(truth, grid, desk_kernel.phi), desk_cube, e22)
    assert conc.delta_min <= 1e-12  # delta = 0 config

    gamma = contraction_factor(desk_kernel, 0.05, 0.0, 18).gamma
    data = rk.eval_coeff_at_points(truth, desk_kernel.phi, samples.points)
    _, trace = rk.iterate_reconstruct(
        desk_kernel, samples, data, grid, e22,
        theta=0.05, r_max=50, tol=1e-14, truth=truth, gamma_theory=gamma,
    )
    errors = trace.errors
    hit = next((r for r, err in enumerate(errors) if err <= 1e-6), None)
    assert hit is not None and hit <= 50

    ratios = [errors[r + 1] / errors[r] for r in range(2, trace.iterations) if errors[r] > 1e-15]
    assert all(rt <= gamma + 0.05 for rt in ratios)

    if gamma < 1.0:
        certs = [error_certificate(gamma, trace.truth_norm, r) for r in range(len(errors))]
        slack = 1e-9  # quadrature slack; the coefficient fixed point is exact
        assert all(err <= ct + slack for err, ct in zip(errors, certs))
        cert_note = "certified decay verified"
    else:
        # the closed-form certificate is vacuous at the canonical desk
        # configuration; the run itself must contract
        with pytest.raises(ValueError):
            error_certificate(gamma, 1.0, 1)
        assert trace.gamma_emp is not None and trace.gamma_emp < 1.0
        cert_note = f"certificate vacuous (gamma_theory={gamma:.2f} >= 1), gamma_emp={trace.gamma_emp:.3f}"
    took = time.time() - t0
    assert took < 180.0
    record(
        5,
        f"rel err <= 1e-6 at r={hit} (final {errors[-1]:.2e}); ratios <= gamma+0.05; {cert_note}; {took:.1f}s",
    )


def test_criterion_06_partition_exactness(desk_cube):
    grid = rk.Grid(desk_cube.padded(0.5), 90, 90)
    pts = grid.node_coordinates().reshape(-1, 2)
    rng = np.random.default_rng(106)
    for trial in range(20):
        l, m = int(rng.integers(4, 12)), int(rng.integers(4, 12))
        s = rk.draw_samples(desk_cube, l, m, seed=derive_seed(106, trial))
        theta = rk.covering_gap(s, desk_cube, grid) * 1.01
        pu = build_partition(s, theta, grid)
        sums = pu.weight_sums()
        inside = pu.in_cube()
        assert np.all(sums[inside] == 1.0) and np.all(sums[~inside] == 0.0)
        assert sums.min() >= 0.0 and sums.max() <= 1.0
        a = pu.assignment.ravel()
        owned = a >= 0
        dist = np.abs(pts[owned] - s.flat_points[a[owned]]).max(axis=1)
        assert dist.max() <= theta + 1e-12
    record(6, "20 random sample sets: unit weight sums on the cube, indicator range, supports within theta")


def test_criterion_07_sampling_inequality_monte_carlo(desk_kernel, desk_lattice, desk_cube, e22):
    t0 = time.time()
    grid = desk_grid(288)
    mu, delta, trials = 0.5, 0.1, 500
    family = make_unit_family(desk_kernel.phi, desk_lattice, grid, e22, desk_cube, count=25, singles=8, seed=107)
    for c in family:  # delta <= 0.1 by construction (interior supports: delta = 0)
        conc = rk.concentration_ratio(rk.synthesize(c, grid, desk_kernel.phi), desk_cube, e22)
        assert conc.delta_min <= delta
    coefs = np.stack([c.coefficients for c in family])
    tc = rk.compute_theory_constants(desk_kernel, desk_cube, e22, delta=delta, resolution=64)
    D = tc.D
    p, q = e22.p, e22.q
    R, S, n = desk_cube.R, desk_cube.S, desk_cube.n

    def failure_rates(l, m):
        lower = (
            l ** (1 / p) * m ** (1 / q) * (1 - delta) ** (p * q) * D ** (1 - p * q)
            / (R ** (n * p) * S**q) * (1 - mu)
        )
        upper = l * m * (1 + mu * D ** (1 - p * q))
        low_fail = up_fail = 0
        for t in range(trials):
            s = rk.draw_samples(desk_cube, l, m, seed=derive_seed(107, l, m, t))
            idx, val = desk_kernel.covering(s.flat_points)
            member_vals = coefs[:, np.maximum(idx, 0)] * np.where(idx >= 0, val, 0.0)
            middles = np.sqrt((member_vals**2).sum(axis=1))  # p = q = 2
            low_fail += bool((middles < lower).any())
            up_fail += bool((middles > upper).any())
        return low_fail / trials, up_fail / trials

    rate_low_250, rate_up_250 = failure_rates(10, 25)
    rate_low_4000, rate_up_4000 = failure_rates(50, 80)
    assert rate_low_4000 <= rate_low_250
    assert rate_low_4000 <= 0.05 and rate_up_4000 == 0.0  # holds in >= 95% of trials

    # the closed-form probability is vacuous at desk scale: report, not reproduce
    bound = rk.sampling_success_probability(50, 80, desk_cube, mu, delta, tc, e22)
    assert bound.vacuous and bound.tail_log > 0
    took = time.time() - t0
    assert took < 300.0
    record(
        7,
        f"lower-bound failure rate {rate_low_4000:.3f}@lm=4000 <= {rate_low_250:.3f}@lm=250 over "
        f"{trials} trials; success {1 - rate_low_4000 - rate_up_4000:.1%} >= 95%; paper bound vacuous "
        f"(log tail {bound.tail_log:.3g} > 0); {took:.1f}s",
    )


def test_criterion_08_deviation_empirical_bounds(desk_kernel, desk_lattice, desk_cube, e22):
    grid = desk_grid(288)
    family = make_unit_family(desk_kernel.phi, desk_lattice, grid, e22, desk_cube, count=1, singles=1, seed=108)
    tc = rk.compute_theory_constants(desk_kernel, desk_cube, e22, delta=0.0, resolution=64)
    rep = rk.deviation_bound_check(
        family[0], desk_kernel.phi, desk_cube, tc, e22, grid,
        n_batches=100, batch_size=200, seed=108,
    )
    assert rep.mean_ok
    assert rep.var_ok_fraction >= 0.99
    assert rep.sup_ok
    record(
        8,
        f"E(Z)={rep.mean:.2e} within 4 SE; Var bound held in {rep.var_ok_fraction:.0%} of 100 batches; "
        f"sup|Z|={rep.sup_abs:.3f} <= k={rep.sup_bound:.3f}",
    )


def _mp_bracket(n, R, S, q):
    return (2 * (4 / mp.mpf(n) + S + 1) ** (n * q) + (4 / mp.mpf(n) + R + 1) ** q) ** (1 / q)


def test_criterion_09_formula_oracle_equivalence(desk_kernel, desk_cube, e22):
    from dataclasses import replace

    rng = np.random.default_rng(109)
    base_tc = rk.compute_theory_constants(desk_kernel, desk_cube, e22, resolution=16)
    worst = {}

    def track(name, got, want):
        rel = abs(got - float(want)) / max(abs(float(want)), 1e-300)
        worst[name] = max(worst.get(name, 0.0), rel)

    for _ in range(50):
        lam = float(rng.uniform(0.1, 50))
        l, m = int(rng.integers(1, 100)), int(rng.integers(1, 100))
        s2, M = float(rng.uniform(0.01, 5)), float(rng.uniform(0, 5))
        got = rk.bernstein_tail_bound(lam, l, m, s2, M)
        want = 2 * mp.exp(-mp.mpf(lam) ** 2 / (2 * l * m * mp.mpf(s2) + mp.mpf(2) / 3 * mp.mpf(M) * lam))
        track("bernstein", got, want)

        R, S = float(rng.uniform(1, 4)), float(rng.uniform(1, 4))
        cube = rk.Cube(R, S, 1)
        log_a, b = float(rng.uniform(0, 40)), float(rng.uniform(1e-4, 0.1))
        D = float(rng.uniform(1.5, 6))
        tc = replace(base_tc, log_a=log_a, b=b, D=D)
        ev = rk.event_probability_bound(lam, l, m, cube, tc, e22)
        denom = 12 * l * m * mp.mpf(R) ** mp.mpf(-0.5) * mp.mpf(S) ** mp.mpf(-0.5) + lam
        want_log = mp.log(3) + log_a - mp.mpf(b) * mp.mpf(lam) ** 2 / denom
        track("event_log", ev.log_value, want_log)
        if math.isfinite(ev.value):
            track("event", ev.value, mp.exp(want_log))

        mu, delta = float(rng.uniform(0.05, 0.95)), float(rng.uniform(0, 0.5))
        pr = rk.sampling_success_probability(l, m, cube, mu, delta, tc, e22)
        num = mp.mpf(mu) ** 2 * l * m * (1 - mp.mpf(delta)) ** 8 * mp.mpf(D) ** -6
        den = 12 * mp.mpf(R) ** 4 * mp.mpf(S) ** 4 + mp.mpf(D) ** -3 * mp.mpf(R) ** 2 * mp.mpf(S) ** 2
        want_tail_log = mp.log(3) + log_a - mp.mpf(b) * num / den
        track("success_tail_log", pr.tail_log, want_tail_log)
        if math.isfinite(pr.tail) and pr.tail > 0:
            track("success_tail", pr.tail, mp.exp(want_tail_log))

        eps = float(rng.uniform(0.01, 0.9))
        B, C = float(rng.uniform(0.5, 3)), float(rng.uniform(0.5, 3))
        N0 = int(rng.integers(1, 9))
        cb = rk.covering_bounds(eps, cube, e22, B, C, N0, D)
        n = 1
        br = _mp_bracket(n, mp.mpf(R), mp.mpf(S), mp.mpf(2))
        want_nmin = (
            R + S + 2
            + B * C * mp.mpf(4) ** mp.mpf(0.5 + 0.5 + 0.5) * br * mp.mpf(R) ** mp.mpf(0.5) * mp.mpf(S) ** mp.mpf(0.5)
            * mp.mpf(eps) ** (-mp.mpf(1) / 3)
        )
        track("N_min", cb.n_min, want_nmin)
        c1 = (B * C * mp.mpf(4) ** 2 * br) ** 2
        want_deps = mp.mpf(4) * N0 * ((R + S + 2) ** 2 + c1 * mp.mpf(eps) ** (-mp.mpf(2) / 3))
        track("d_eps", cb.d_eps, want_deps)
        track("log_N_eps", cb.log_n_eps, want_deps * mp.log(8 * mp.mpf(D) / mp.mpf(eps)))

        eps_f = float(rng.uniform(1e-6, 0.5))
        ms = rk.min_sample_count(cube, mu, delta, eps_f, tc, e22)
        num2 = (
            mp.mpf(2) ** 10 * mp.mpf(4) ** 4 * (log_a + mp.log(3 / mp.mpf(eps_f)))
            * (12 * mp.mpf(R) ** 4 * mp.mpf(S) ** 4 + mp.mpf(D) ** -3 * mp.mpf(R) ** 2 * mp.mpf(S) ** 2)
        )
        den2 = mp.mpf(mu) ** 2 * (1 - mp.mpf(delta)) ** 8 * mp.mpf(D) ** -6
        track("min_samples", ms.lm_star, mp.sqrt(num2 / den2))

        gam, fn, r = float(rng.uniform(0, 0.95)), float(rng.uniform(0, 10)), int(rng.integers(0, 20))
        track(
            "certificate",
            error_certificate(gam, fn, r),
            (1 + mp.mpf(gam)) / (1 - mp.mpf(gam)) * mp.mpf(gam) ** (r + 1) * fn,
        )
        rr, r1, sdim = float(rng.uniform(0.1, 5)), float(rng.uniform(0.1, 5)), float(rng.integers(1, 9))
        track("covering_number", rk.ball_covering_number(rr, r1, sdim), (2 * mp.mpf(rr) / mp.mpf(r1) + 1) ** mp.mpf(sdim))

    bad = {k: v for k, v in worst.items() if v > 1e-12}
    assert not bad, f"oracle mismatches: {bad}"
    record(9, "8 evaluators x 50 points match mpmath re-evaluation; worst rel err "
              f"{max(worst.values()):.2e} <= 1e-12")


def test_criterion_10_cli_determinism(tmp_path):
    base = {
        "grid": {"nx": 144, "nt": 144, "pad": 1.0},
        "resolution": {"constants": 32, "functionals": 18},
        "sweep": {"l": [10], "m": [25]},
        "trials": 5,
        "family": {"count": 3, "singles": 1, "seed": 1},
        "seed": 424242,
        "reconstruct": {
            "theta": 0.06,
            "tol": 1e-10,
            "r_max": 40,
            "compute_gamma": False,
            "samples": {"kind": "grid", "per_spatial": 60, "per_temporal": 60},
            "truth": {"kind": "random", "seed": 7},
        },
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(base))
    produced = {
        "bounds": ["bounds.csv"],
        "sample-sweep": ["trials.csv"],
        "reconstruct": ["trace.csv"],
        "kernel-check": ["idempotency.csv", "w_ladder.csv"],
    }
    checked = 0
    for command, files in produced.items():
        out1 = tmp_path / f"{command}-1"
        out2 = tmp_path / f"{command}-2"
        assert cli_main([command, "--config", str(cfg), "--out", str(out1)]) == 0
        assert cli_main([command, "--config", str(cfg), "--out", str(out2)]) == 0
        for name in files:
            b1 = (out1 / name).read_bytes()
            b2 = (out2 / name).read_bytes()
            assert b1 == b2, f"{command}/{name} not byte-identical"
            checked += 1
    record(10, f"{checked} CSV outputs byte-identical across reruns of all four subcommands")
