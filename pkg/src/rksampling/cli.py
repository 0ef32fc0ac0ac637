"""Reproducible experiment driver.

Subcommands:
    bounds        tabulate every closed-form constant/bound over the sweep
    sample-sweep  Monte Carlo trials of the two-sided sampling inequality
    reconstruct   run the iterative reconstruction and write its trace
    kernel-check  kernel diagnostics: idempotency ladder, decay fit, norms

Common flags: --config PATH, --seed N, --out DIR, --threads N, --trials N.
Exit codes: 0 success, 2 config validation error, 3 non-contraction.

Determinism: per-trial seeds are derived from (master seed, sweep
coordinates, trial index) via the documented SHA-256 rule, trials are
aggregated by index regardless of completion order, and CSV numerics are
printed with 17 significant digits, so reruns are byte-identical.
Timestamps live only in the manifest.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .kernel_space import (
    CoeffSeq,
    apply_T,
    compute_k_sup,
    decay_envelope_check,
    decay_thresholds,
    eval_coeff_at_points,
    kernel_W_norm,
    modulus_w_eps,
    normalize_phi,
    synthesize,
)
from .mixed_norms import Grid, grid_mixed_norm, seq_mixed_norm
from .reconstruction import contraction_factor, iterate_reconstruct
from .sampling_analysis import (
    compute_theory_constants,
    covering_bounds,
    draw_samples,
    min_sample_count,
    grid_sample_set,
    sampling_success_probability,
    make_unit_family,
    sampling_inequality_check,
    wilson_interval,
)
from .seeding import derive_seed
from .signal_io import save_signal

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NON_CONTRACTION = 3


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_manifest(out: Path, cfg: ExperimentConfig, command: str, outputs: list, extra=None) -> None:
    manifest = {
        "tool": "rksampling",
        "version": __version__,
        "command": command,
        "config_sha256": cfg.sha256(),
        "master_seed": cfg.doc["seed"],
        "seed_rule": "sha256(repr((master, *coords, trial)))[:8] little-endian",
        "outputs": sorted(outputs),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _prepare(args):
    cfg = load_config(args.config)
    overrides = {
        key: val
        for key, val in (("seed", args.seed), ("trials", args.trials), ("threads", args.threads))
        if val is not None
    }
    if overrides:
        doc = json.loads(cfg.canonical_json())
        doc.update(overrides)
        cfg = load_config(doc)
    out = Path(args.out if args.out is not None else cfg.doc["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

BOUNDS_COLUMNS = [
    "l", "m", "R", "S", "delta", "mu",
    "k", "D", "A_Gamma", "B_Gamma", "N0_Gamma",
    "C1", "C2", "C3", "G", "log_a", "a", "b",
    "omega_alpha", "omega_beta",
    "N_min", "d_eps", "log_N_eps", "N_eps",
    "probability", "tail_log", "prob_vacuous",
    "min_lm_star", "min_lm_required",
]


def cmd_bounds(cfg: ExperimentConfig, out: Path) -> int:
    e = cfg.exponents()
    eps = cfg.doc["epsilon"]
    rows = []
    cache = {}
    for pt in cfg.sweep_points():
        key = (pt["R"], pt["S"], pt["delta"])
        if key not in cache:
            cube = cfg.cube(pt["R"], pt["S"])
            kernel = cfg.kernel(cube)
            cache[key] = (
                cube,
                compute_theory_constants(
                    kernel,
                    cube,
                    e,
                    delta=pt["delta"],
                    eta=cfg.doc["eta"],
                    alpha=cfg.doc["decay"]["alpha"],
                    beta=cfg.doc["decay"]["beta"],
                    B_frame=cfg.doc["frame"]["B"],
                    C_frame=cfg.doc["frame"]["C"],
                    resolution=cfg.doc["resolution"]["constants"],
                ),
            )
        cube, tc = cache[key]
        cb = covering_bounds(eps, cube, e, tc.B_frame, tc.C_frame, tc.N0_Gamma, tc.D)
        prob = sampling_success_probability(pt["l"], pt["m"], cube, pt["mu"], pt["delta"], tc, e)
        ms = min_sample_count(cube, pt["mu"], pt["delta"], eps, tc, e)
        rows.append([
            pt["l"], pt["m"], pt["R"], pt["S"], pt["delta"], pt["mu"],
            tc.k, tc.D, tc.A_Gamma, tc.B_Gamma, tc.N0_Gamma,
            tc.C1, tc.C2, tc.C3, tc.G, tc.log_a, tc.a, tc.b,
            tc.omega_alpha, tc.omega_beta,
            cb.n_min, cb.d_eps, cb.log_n_eps, cb.n_eps,
            prob.probability, prob.tail_log, prob.vacuous,
            ms.lm_star, ms.lm_required,
        ])
    _write_csv(out / "bounds.csv", BOUNDS_COLUMNS, rows)
    summary = {
        "rows": len(rows),
        "epsilon": eps,
        "vacuous_rows": sum(1 for r in rows if r[BOUNDS_COLUMNS.index("prob_vacuous")]),
        "columns": BOUNDS_COLUMNS,
    }
    (out / "bounds.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, "bounds", ["bounds.csv", "bounds.json"])
    print(f"bounds: wrote {len(rows)} rows to {out / 'bounds.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample-sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = [
    "trial", "seed", "l", "m", "R", "S", "delta", "mu",
    "middle_min", "middle_max", "lower", "upper", "lower_ok", "upper_ok",
]


def cmd_sample_sweep(cfg: ExperimentConfig, out: Path) -> int:
    e = cfg.exponents()
    trials = cfg.doc["trials"]
    master = cfg.doc["seed"]
    fam_cfg = cfg.doc["family"]
    rows = []
    summary_points = []
    for pt in cfg.sweep_points():
        cube = cfg.cube(pt["R"], pt["S"])
        kernel = cfg.kernel(cube)
        grid = cfg.grid(cube)
        tc = compute_theory_constants(
            kernel, cube, e,
            delta=pt["delta"], eta=cfg.doc["eta"],
            B_frame=cfg.doc["frame"]["B"], C_frame=cfg.doc["frame"]["C"],
            resolution=cfg.doc["resolution"]["constants"],
        )
        family = make_unit_family(
            kernel.phi, kernel.lattice, grid, e, cube,
            count=fam_cfg["count"], singles=fam_cfg["singles"], seed=fam_cfg["seed"],
        )
        signals = [synthesize(c, grid, kernel.phi) for c in family]
        norms = [grid_mixed_norm(s, e) for s in signals]
        p, q = e.p, e.q
        D = tc.D
        lower_unit = (
            pt["l"] ** (1.0 / p) * pt["m"] ** (1.0 / q)
            * (1.0 - pt["delta"]) ** (p * q) * D ** (1.0 - p * q)
            / (cube.R ** (cube.n * p) * cube.S ** q) * (1.0 - pt["mu"])
        )
        upper_unit = pt["l"] * pt["m"] * (1.0 + pt["mu"] * D ** (1.0 - p * q))
        coords = (pt["l"], pt["m"], pt["R"], pt["S"], pt["delta"], pt["mu"])

        def run_trial(t):
            seed = derive_seed(master, *coords, t)
            s = draw_samples(cube, pt["l"], pt["m"], seed)
            middles = []
            for c, nrm in zip(family, norms):
                vals = eval_coeff_at_points(c, kernel.phi, s.points)
                middles.append(seq_mixed_norm(vals, e) / nrm)
            return seed, min(middles), max(middles)

        results = {}
        if cfg.doc["threads"] > 1 and trials > 1:
            with ThreadPoolExecutor(max_workers=cfg.doc["threads"]) as ex:
                for t, res in zip(range(trials), ex.map(run_trial, range(trials))):
                    results[t] = res
        else:
            for t in range(trials):
                results[t] = run_trial(t)
        lower_fail = upper_fail = 0
        for t in range(trials):
            seed, mmin, mmax = results[t]
            lok = mmin >= lower_unit - 1e-12 * max(1.0, mmin, lower_unit)
            uok = mmax <= upper_unit + 1e-12 * max(1.0, mmax, upper_unit)
            lower_fail += not lok
            upper_fail += not uok
            rows.append([
                t, seed, pt["l"], pt["m"], pt["R"], pt["S"], pt["delta"], pt["mu"],
                mmin, mmax, lower_unit, upper_unit, lok, uok,
            ])
        lo_ci = wilson_interval(lower_fail, trials)
        up_ci = wilson_interval(upper_fail, trials)
        summary_points.append({
            "point": pt,
            "trials": trials,
            "lower_failures": lower_fail,
            "upper_failures": upper_fail,
            "lower_failure_rate": lower_fail / trials if trials else 0.0,
            "upper_failure_rate": upper_fail / trials if trials else 0.0,
            "lower_failure_wilson95": lo_ci,
            "upper_failure_wilson95": up_ci,
            "lower_bound_unit_norm": lower_unit,
            "upper_bound_unit_norm": upper_unit,
        })
    _write_csv(out / "trials.csv", SWEEP_COLUMNS, rows)
    summary = {"family_size": fam_cfg["count"], "points": summary_points, "columns": SWEEP_COLUMNS}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, "sample-sweep", ["trials.csv", "summary.json"])
    print(f"sample-sweep: {len(rows)} trial rows over {len(summary_points)} sweep points -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------


def cmd_reconstruct(cfg: ExperimentConfig, out: Path) -> int:
    e = cfg.exponents()
    cube = cfg.cube()
    kernel = cfg.kernel(cube)
    grid = cfg.grid(cube)
    rc = cfg.doc["reconstruct"]

    scfg = rc["samples"]
    if scfg["kind"] == "grid":
        samples = grid_sample_set(cube, scfg["per_spatial"], scfg["per_temporal"])
    else:
        samples = draw_samples(cube, scfg["l"], scfg["m"], derive_seed(cfg.doc["seed"], "samples", scfg["seed"]))

    tcfg = rc["truth"]
    half = np.array([cube.R / 2] * cube.n + [cube.S / 2])
    interior = np.all(
        np.abs(kernel.lattice.nodes) + 1.0 / 3.0 <= half + 1e-9, axis=1
    )
    if tcfg["kind"] == "single":
        idx = np.nonzero(interior)[0]
        coef = np.zeros(len(kernel.lattice))
        coef[idx[len(idx) // 2]] = 1.0
    else:
        rng = np.random.default_rng(np.random.SeedSequence(derive_seed(cfg.doc["seed"], "truth", tcfg["seed"])))
        coef = np.where(interior, rng.standard_normal(len(kernel.lattice)), 0.0)
    truth = CoeffSeq(kernel.lattice, coef)
    data = eval_coeff_at_points(truth, kernel.phi, samples.points)

    gamma_theory = None
    if rc["compute_gamma"]:
        rep = contraction_factor(kernel, rc["theta"], cfg.doc["delta"], cfg.doc["resolution"]["functionals"])
        gamma_theory = rep.gamma

    sig, trace = iterate_reconstruct(
        kernel, samples, data, grid, e,
        theta=rc["theta"], r_max=rc["r_max"], tol=float(rc["tol"]),
        truth=truth, gamma_theory=gamma_theory,
    )

    save_signal(out / "reconstruction.gsig", sig)
    rows = []
    for r in range(trace.iterations + 1):
        rows.append([
            r,
            trace.residuals[r - 1] if r >= 1 else None,
            trace.errors[r] if trace.errors else None,
            trace.certificates[r] if trace.certificates else None,
        ])
    _write_csv(out / "trace.csv", ["r", "residual", "rel_error", "certificate"], rows)
    summary = {
        "iterations": trace.iterations,
        "converged": trace.converged,
        "non_contraction": trace.non_contraction,
        "gamma_emp": trace.gamma_emp,
        "gamma_theory": gamma_theory,
        "gamma_theory_contractive": (gamma_theory is not None and gamma_theory < 1.0),
        "final_residual": trace.residuals[-1] if trace.residuals else 0.0,
        "final_rel_error": trace.errors[-1] if trace.errors else None,
        "theta": rc["theta"],
        "lm": samples.l * samples.m,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, "reconstruct", ["reconstruction.gsig", "trace.csv", "summary.json"])
    if trace.non_contraction:
        print(
            f"reconstruct: NON-CONTRACTION after {trace.iterations} iterations "
            f"(gamma_theory={gamma_theory}); residuals stopped decreasing",
            file=sys.stderr,
        )
        return EXIT_NON_CONTRACTION
    print(
        f"reconstruct: converged={trace.converged} iterations={trace.iterations} "
        f"final_rel_error={summary['final_rel_error']}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# kernel-check
# ---------------------------------------------------------------------------


def cmd_kernel_check(cfg: ExperimentConfig, out: Path) -> int:
    e = cfg.exponents()
    cube = cfg.cube()
    kernel = cfg.kernel(cube)
    res = cfg.doc["resolution"]

    # idempotency / reproduction ladder over three grid refinements
    base = cfg.doc["grid"]
    rng = np.random.default_rng(np.random.SeedSequence(derive_seed(cfg.doc["seed"], "kernel-check")))
    coef = rng.standard_normal(len(kernel.lattice))
    c = CoeffSeq(kernel.lattice, coef)
    ladder_rows = []
    for div in (4, 2, 1):
        nx, nt = max(8, base["nx"] // div), max(8, base["nt"] // div)
        g = Grid(cube.padded(base["pad"]), nx, nt)
        f = synthesize(c, g, kernel.phi)
        tf = apply_T(kernel, f)
        ttf = apply_T(kernel, tf)
        idem = grid_mixed_norm(ttf - tf, e) / grid_mixed_norm(tf, e)
        repro = grid_mixed_norm(tf - f, e) / grid_mixed_norm(f, e)
        ladder_rows.append([g.hx, idem, repro])

    # regularity modulus ladder
    w_rows = []
    for k in range(3):
        eps = 0.1 / 2**k
        w_rows.append([eps, modulus_w_eps(kernel, eps, res["functionals"])])

    amp = kernel.phi.amplitude
    a_star = normalize_phi(cube.n)
    kw = kernel_W_norm(kernel, res["functionals"])
    ksup, argmax = compute_k_sup(kernel, e, res["constants"])
    tc = compute_theory_constants(
        kernel, cube, e, delta=cfg.doc["delta"], eta=cfg.doc["eta"],
        B_frame=cfg.doc["frame"]["B"], C_frame=cfg.doc["frame"]["C"],
        resolution=res["constants"],
    )
    a_min, b_min = decay_thresholds(cube.n, e)
    alpha = cfg.doc["decay"]["alpha"] or a_min + 1.0
    beta = cfg.doc["decay"]["beta"] or b_min + 1.0
    env = decay_envelope_check(kernel, alpha, beta, e, seed=derive_seed(cfg.doc["seed"], "envelope"))

    inv_q = 1.0 / e.q
    d_identity = tc.D >= tc.k * (1.0 - cfg.doc["delta"]) ** (-inv_q) - 1e-12

    _write_csv(out / "idempotency.csv", ["h", "idem_residual", "repro_residual"], ladder_rows)
    _write_csv(out / "w_ladder.csv", ["eps", "w_eps"], w_rows)
    report = {
        "amplitude": amp,
        "normalizing_amplitude": a_star,
        "normalized": abs(amp / a_star - 1.0) <= 1e-8,
        "kernel_W_norm": kw,
        "k_sup": ksup,
        "k_argmax": list(argmax) if argmax else None,
        "D": tc.D,
        "D_identity_ok": bool(d_identity),
        "idempotency_ladder": [
            {"h": r[0], "idem": r[1], "repro": r[2]} for r in ladder_rows
        ],
        "idem_monotone": all(
            ladder_rows[i][1] > ladder_rows[i + 1][1] for i in range(len(ladder_rows) - 1)
        ),
        "w_ladder": [{"eps": r[0], "w": r[1]} for r in w_rows],
        "w_monotone": all(w_rows[i][1] >= w_rows[i + 1][1] for i in range(len(w_rows) - 1)),
        "envelope": {
            "alpha": env.alpha,
            "beta": env.beta,
            "alpha_min": env.alpha_min,
            "beta_min": env.beta_min,
            "c": env.c,
        },
    }
    (out / "kernel_check.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, "kernel-check", ["idempotency.csv", "w_ladder.csv", "kernel_check.json"])
    print(
        f"kernel-check: normalized={report['normalized']} |K|_W={kw:.6g} k={ksup:.6g} "
        f"idem_monotone={report['idem_monotone']} w_monotone={report['w_monotone']}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rksampling", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [
        ("bounds", cmd_bounds),
        ("sample-sweep", cmd_sample_sweep),
        ("reconstruct", cmd_reconstruct),
        ("kernel-check", cmd_kernel_check),
    ]:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON or YAML config document")
        sp.add_argument("--out", default=None, help="output directory (default: config out_dir)")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--trials", type=int, default=None, help="override the trial count")
        sp.add_argument("--threads", type=int, default=None, help="parallel trial workers")
        sp.set_defaults(func=fn)
    args = parser.parse_args(argv)
    try:
        cfg, out = _prepare(args)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as err:
        print(f"cannot load config: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(cfg, out)


if __name__ == "__main__":
    sys.exit(main())
