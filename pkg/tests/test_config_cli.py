import csv
import json

import numpy as np
import pytest

import rksampling as rk
from rksampling.cli import main
from rksampling.config import ConfigError, DEFAULT_CONFIG, load_config
from rksampling.seeding import derive_seed


FAST = {
    "grid": {"nx": 144, "nt": 144, "pad": 1.0},
    "resolution": {"constants": 32, "functionals": 18},
    "sweep": {"l": [10], "m": [25]},
    "trials": 4,
    "family": {"count": 3, "singles": 1, "seed": 1},
}


def write_cfg(tmp_path, name="cfg.json", **over):
    doc = json.loads(json.dumps(FAST))
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(doc.get(key), dict):
            doc[key].update(val)
        else:
            doc[key] = val
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestSeeding:
    def test_stable_and_distinct(self):
        a = derive_seed(1, "x", 0)
        assert a == derive_seed(1, "x", 0)
        assert a != derive_seed(1, "x", 1)
        assert a != derive_seed(2, "x", 0)
        assert 0 <= a < 2**64


class TestConfigValidation:
    def test_defaults_load(self):
        cfg = load_config({})
        assert cfg.doc == DEFAULT_CONFIG
        assert cfg.n == 1

    def test_all_errors_reported(self):
        bad = {
            "kernel": {"n": 0, "amplitude": -1.0},
            "cube": {"R": -4.0},
            "exponents": {"p": 0.5},
            "mu": 1.5,
            "trials": -1,
        }
        with pytest.raises(ConfigError) as err:
            load_config(bad)
        paths = {p for p, _ in err.value.errors}
        assert {"kernel.n", "kernel.amplitude", "cube.R", "exponents.p", "mu", "trials"} <= paths

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError) as err:
            load_config({"kernle": {}})
        assert err.value.errors[0][0] == "kernle"

    def test_explicit_lattice(self):
        cfg = load_config(
            {"kernel": {"lattice": {"kind": "explicit", "nodes": [[0.0, 0.0], [1.0, 0.0]], "gap": 1.0}}}
        )
        lat = cfg.lattice()
        assert len(lat) == 2

    def test_hash_is_stable(self):
        a = load_config({"seed": 5})
        b = load_config({"seed": 5})
        assert a.sha256() == b.sha256()
        assert a.sha256() != load_config({"seed": 6}).sha256()

    def test_yaml_config(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("seed: 99\ntrials: 2\n")
        cfg = load_config(p)
        assert cfg.doc["seed"] == 99


class TestBoundsCommand:
    def test_single_point_matches_direct_calls(self, tmp_path):
        p = write_cfg(tmp_path)
        out = tmp_path / "b"
        assert main(["bounds", "--config", str(p), "--out", str(out)]) == 0
        row = read_rows(out / "bounds.csv")[0]

        cfg = load_config(p)
        e = cfg.exponents()
        cube = cfg.cube()
        tc = rk.compute_theory_constants(
            cfg.kernel(cube), cube, e, delta=0.0, eta=0.7, resolution=32
        )
        assert float(row["k"]) == pytest.approx(tc.k, rel=1e-15)
        assert float(row["G"]) == pytest.approx(tc.G, rel=1e-15)
        assert float(row["log_a"]) == pytest.approx(tc.log_a, rel=1e-15)
        cb = rk.covering_bounds(0.1, cube, e, 1.0, 1.0, tc.N0_Gamma, tc.D)
        assert float(row["d_eps"]) == pytest.approx(cb.d_eps, rel=1e-15)
        ms = rk.min_sample_count(cube, 0.5, 0.0, 0.1, tc, e)
        assert float(row["min_lm_star"]) == pytest.approx(ms.lm_star, rel=1e-15)
        assert row["prob_vacuous"] == "1"

    def test_tail_log_monotone_along_lm(self, tmp_path):
        p = write_cfg(tmp_path, sweep={"l": [10, 100, 1000], "m": [25]})
        out = tmp_path / "b2"
        assert main(["bounds", "--config", str(p), "--out", str(out)]) == 0
        rows = read_rows(out / "bounds.csv")
        tails = [float(r["tail_log"]) for r in rows]
        lms = [int(r["l"]) * int(r["m"]) for r in rows]
        order = np.argsort(lms)
        sorted_tails = np.array(tails)[order]
        assert np.all(np.diff(sorted_tails) <= 0)

    def test_rerun_byte_identical(self, tmp_path):
        p = write_cfg(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        main(["bounds", "--config", str(p), "--out", str(out1)])
        main(["bounds", "--config", str(p), "--out", str(out2)])
        assert (out1 / "bounds.csv").read_bytes() == (out2 / "bounds.csv").read_bytes()


class TestSampleSweepCommand:
    def test_zero_trials(self, tmp_path):
        p = write_cfg(tmp_path, trials=0)
        out = tmp_path / "s0"
        assert main(["sample-sweep", "--config", str(p), "--out", str(out)]) == 0
        rows = read_rows(out / "trials.csv")
        assert rows == []
        summary = json.loads((out / "summary.json").read_text())
        assert summary["points"][0]["trials"] == 0
        assert summary["points"][0]["lower_failures"] == 0

    def test_counts_match_rows(self, tmp_path):
        p = write_cfg(tmp_path)
        out = tmp_path / "s1"
        assert main(["sample-sweep", "--config", str(p), "--out", str(out)]) == 0
        rows = read_rows(out / "trials.csv")
        summary = json.loads((out / "summary.json").read_text())
        assert len(rows) == summary["points"][0]["trials"] == 4
        fails = sum(1 for r in rows if r["lower_ok"] == "0")
        assert fails == summary["points"][0]["lower_failures"]

    def test_rerun_byte_identical_and_seed_override(self, tmp_path):
        p = write_cfg(tmp_path)
        out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        main(["sample-sweep", "--config", str(p), "--out", str(out1)])
        main(["sample-sweep", "--config", str(p), "--out", str(out2)])
        main(["sample-sweep", "--config", str(p), "--out", str(out3), "--seed", "777"])
        assert (out1 / "trials.csv").read_bytes() == (out2 / "trials.csv").read_bytes()
        assert (out1 / "trials.csv").read_bytes() != (out3 / "trials.csv").read_bytes()

    def test_threads_deterministic(self, tmp_path):
        p = write_cfg(tmp_path, trials=6)
        out1, out2 = tmp_path / "t1", tmp_path / "t2"
        main(["sample-sweep", "--config", str(p), "--out", str(out1), "--threads", "1"])
        main(["sample-sweep", "--config", str(p), "--out", str(out2), "--threads", "4"])
        assert (out1 / "trials.csv").read_bytes() == (out2 / "trials.csv").read_bytes()


class TestReconstructCommand:
    def test_demo_converges(self, tmp_path):
        p = write_cfg(
            tmp_path,
            grid={"nx": 288, "nt": 288, "pad": 1.0},
            reconstruct={
                "theta": 0.05,
                "tol": 1e-9,
                "r_max": 60,
                "compute_gamma": True,
                "samples": {"kind": "grid", "per_spatial": 80, "per_temporal": 80},
                "truth": {"kind": "random", "seed": 7},
            },
        )
        out = tmp_path / "rec"
        assert main(["reconstruct", "--config", str(p), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["converged"]
        assert summary["final_rel_error"] <= 1e-6
        assert summary["gamma_theory"] > 1.0 and not summary["gamma_theory_contractive"]
        rows = read_rows(out / "trace.csv")
        assert len(rows) == summary["iterations"] + 1
        assert rows[0]["residual"] == ""
        sig = rk.load_signal(out / "reconstruction.gsig")
        assert sig.grid.nx == 288

    def test_tol_inf_stops_at_zero(self, tmp_path):
        p = write_cfg(
            tmp_path,
            reconstruct={
                "theta": 0.06,
                "tol": 1e999,
                "r_max": 10,
                "compute_gamma": False,
                "samples": {"kind": "grid", "per_spatial": 60, "per_temporal": 60},
                "truth": {"kind": "single"},
            },
        )
        out = tmp_path / "rec0"
        assert main(["reconstruct", "--config", str(p), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["iterations"] == 0
        assert len(read_rows(out / "trace.csv")) == 1

    def test_non_contraction_exit_code(self, tmp_path, monkeypatch):
        # exit-code plumbing: reproduce the stalling scenario (samples crowded
        # onto one node, inconsistent data) covered in the reconstruction tests
        import rksampling.cli as cli

        p = write_cfg(
            tmp_path,
            reconstruct={
                "theta": 4.0,
                "tol": 1e-12,
                "r_max": 60,
                "compute_gamma": False,
                "samples": {"kind": "random", "l": 4, "m": 4, "seed": 5},
                "truth": {"kind": "random", "seed": 3},
            },
        )

        def crowded(cube, l, m, seed, product=False):
            rng = np.random.default_rng(11)
            pts = rng.uniform(-0.08, 0.08, size=(l, m, cube.n + 1))
            return rk.SampleSet(pts, l, m, seed, cube)

        def noisy_data(truth, phi, pts):
            rng = np.random.default_rng(11)
            return rng.standard_normal(pts.shape[:-1]) + 3.0

        monkeypatch.setattr(cli, "draw_samples", crowded)
        monkeypatch.setattr(cli, "eval_coeff_at_points", noisy_data)
        rc = main(["reconstruct", "--config", str(p), "--out", str(tmp_path / "recnc")])
        assert rc == 3

    def test_invalid_config_exit_code(self, tmp_path):
        p = write_cfg(tmp_path, mu=2.0)
        assert main(["reconstruct", "--config", str(p), "--out", str(tmp_path / "x")]) == 2

    def test_missing_config_exit_code(self, tmp_path):
        assert main(["bounds", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


class TestKernelCheckCommand:
    def test_report_contents(self, tmp_path):
        p = write_cfg(tmp_path, grid={"nx": 192, "nt": 192, "pad": 1.0})
        out = tmp_path / "kc"
        assert main(["kernel-check", "--config", str(p), "--out", str(out)]) == 0
        rep = json.loads((out / "kernel_check.json").read_text())
        assert rep["normalized"]
        assert rep["idem_monotone"]
        assert rep["w_monotone"]
        assert rep["D_identity_ok"]
        assert rep["kernel_W_norm"] == pytest.approx(27.0 / 9.0, rel=1e-9)
        ladder = read_rows(out / "idempotency.csv")
        assert len(ladder) == 3

    def test_rerun_byte_identical(self, tmp_path):
        p = write_cfg(tmp_path, grid={"nx": 96, "nt": 96, "pad": 1.0})
        out1, out2 = tmp_path / "k1", tmp_path / "k2"
        main(["kernel-check", "--config", str(p), "--out", str(out1)])
        main(["kernel-check", "--config", str(p), "--out", str(out2)])
        for name in ("idempotency.csv", "w_ladder.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestCsvSchema:
    def test_documented_columns_are_emitted(self, tmp_path):
        from rksampling.cli import BOUNDS_COLUMNS, SWEEP_COLUMNS

        p = write_cfg(tmp_path, trials=1)
        out_b, out_s = tmp_path / "schema-b", tmp_path / "schema-s"
        main(["bounds", "--config", str(p), "--out", str(out_b)])
        main(["sample-sweep", "--config", str(p), "--out", str(out_s)])
        with open(out_b / "bounds.csv") as fh:
            assert next(csv.reader(fh)) == BOUNDS_COLUMNS
        with open(out_s / "trials.csv") as fh:
            assert next(csv.reader(fh)) == SWEEP_COLUMNS
        # summaries document their column lists too
        assert json.loads((out_b / "bounds.json").read_text())["columns"] == BOUNDS_COLUMNS
        assert json.loads((out_s / "summary.json").read_text())["columns"] == SWEEP_COLUMNS


class TestManifest:
    def test_manifest_written(self, tmp_path):
        p = write_cfg(tmp_path)
        out = tmp_path / "m"
        main(["bounds", "--config", str(p), "--out", str(out)])
        man = json.loads((out / "manifest.json").read_text())
        assert man["tool"] == "rksampling"
        assert man["command"] == "bounds"
        assert man["config_sha256"] == load_config(p).sha256()
        assert "bounds.csv" in man["outputs"]
