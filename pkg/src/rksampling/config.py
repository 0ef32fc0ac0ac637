"""Experiment configuration: schema, validation, and object builders.

Configs are plain JSON or YAML key-value documents.  Validation is total:
every invalid field is reported with its dotted path, never just the
first failure.  See ``DEFAULT_CONFIG`` for the full schema with the
desk-scale defaults.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernel_space import (
    GeneratorPhi,
    Kernel,
    Lattice,
    SUPPORT_RADIUS,
    default_lattice,
    normalize_phi,
)
from .mixed_norms import Cube, Exponents, Grid

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULT_CONFIG", "load_config"]

TWO_THIRDS = 2.0 / 3.0

DEFAULT_CONFIG: dict = {
    "kernel": {
        "n": 1,
        "amplitude": "normalized",
        "lattice": {"kind": "scaled_grid", "spacing": TWO_THIRDS, "pad": SUPPORT_RADIUS},
    },
    "cube": {"R": 4.0, "S": 4.0},
    "grid": {"nx": 576, "nt": 576, "pad": 1.0},
    "exponents": {"p": 2.0, "q": 2.0},
    "delta": 0.0,
    "mu": 0.5,
    "eta": 0.7,
    "frame": {"B": 1.0, "C": 1.0},
    "decay": {"alpha": None, "beta": None},
    "resolution": {"constants": 64, "functionals": 18},
    "epsilon": 0.1,
    "sweep": {"l": [50], "m": [80], "R": None, "S": None, "delta": None, "mu": None},
    "trials": 100,
    "seed": 20240817,
    "threads": 1,
    "out_dir": "out",
    "family": {"count": 25, "singles": 8, "seed": 1},
    "reconstruct": {
        "theta": 0.05,
        "tol": 1e-9,
        "r_max": 200,
        "compute_gamma": True,
        "samples": {"kind": "grid", "per_spatial": 80, "per_temporal": 80},
        "truth": {"kind": "random", "seed": 7},
    },
}


class ConfigError(ValueError):
    """Carries the complete list of (path, message) validation errors."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "\n".join(f"  {path}: {msg}" for path, msg in self.errors)
        super().__init__(f"invalid configuration:\n{lines}")


# Variant records: the admissible fields depend on "kind", so overrides are
# merged against the kind-matching template instead of the default kind's.
_VARIANTS = {
    "kernel.lattice": {
        "scaled_grid": {"kind": "scaled_grid", "spacing": TWO_THIRDS, "pad": SUPPORT_RADIUS},
        "explicit": {"kind": "explicit", "nodes": None, "gap": TWO_THIRDS},
        "empty": {"kind": "empty"},
    },
    "reconstruct.samples": {
        "grid": {"kind": "grid", "per_spatial": 80, "per_temporal": 80},
        "random": {"kind": "random", "l": 80, "m": 80, "seed": 0},
    },
    "reconstruct.truth": {
        "random": {"kind": "random", "seed": 7},
        "single": {"kind": "single"},
    },
}


def _merge(base: dict, override: dict, errors, path="") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            errors.append((here, "unknown field"))
            continue
        if here in _VARIANTS and isinstance(val, dict):
            kind = val.get("kind", base[key].get("kind"))
            template = _VARIANTS[here].get(kind)
            if template is None:
                errors.append((f"{here}.kind", f"expected one of {sorted(_VARIANTS[here])}, got {kind!r}"))
                continue
            out[key] = _merge(template, val, errors, here)
        elif isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, errors, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


class _Check:
    def __init__(self):
        self.errors = []

    def number(self, doc, path, lo=None, hi=None, strict_lo=False, allow_none=False):
        val = _get(doc, path)
        if val is None and allow_none:
            return None
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
            self.errors.append((path, f"expected a finite number, got {val!r}"))
            return None
        if lo is not None and (val <= lo if strict_lo else val < lo):
            op = ">" if strict_lo else ">="
            self.errors.append((path, f"must be {op} {lo}, got {val}"))
        if hi is not None and val > hi:
            self.errors.append((path, f"must be <= {hi}, got {val}"))
        return val

    def integer(self, doc, path, lo=None):
        val = _get(doc, path)
        if not isinstance(val, int) or isinstance(val, bool):
            self.errors.append((path, f"expected an integer, got {val!r}"))
            return None
        if lo is not None and val < lo:
            self.errors.append((path, f"must be >= {lo}, got {val}"))
        return val

    def choice(self, doc, path, options):
        val = _get(doc, path)
        if val not in options:
            self.errors.append((path, f"expected one of {sorted(options)}, got {val!r}"))
        return val


def _get(doc, path):
    cur = doc
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def _validate(doc: dict) -> list:
    ck = _Check()
    n = ck.integer(doc, "kernel.n", lo=1)
    amp = _get(doc, "kernel.amplitude")
    if amp != "normalized" and (
        not isinstance(amp, (int, float)) or isinstance(amp, bool) or not (
            isinstance(amp, (int, float)) and amp > 0 and math.isfinite(amp)
        )
    ):
        ck.errors.append(("kernel.amplitude", f'expected "normalized" or a positive number, got {amp!r}'))
    kind = ck.choice(doc, "kernel.lattice.kind", {"scaled_grid", "explicit", "empty"})
    if kind == "scaled_grid":
        ck.number(doc, "kernel.lattice.spacing", lo=TWO_THIRDS - 1e-12)
        ck.number(doc, "kernel.lattice.pad", lo=0.0)
    elif kind == "explicit":
        nodes = _get(doc, "kernel.lattice.nodes")
        if not isinstance(nodes, list) or not nodes:
            ck.errors.append(("kernel.lattice.nodes", "explicit lattice needs a nonempty node list"))
        elif n is not None and any(
            not isinstance(row, list) or len(row) != n + 1 for row in nodes
        ):
            ck.errors.append(("kernel.lattice.nodes", f"every node needs n+1 = {n + 1} coordinates"))
        gap = _get(doc, "kernel.lattice.gap") or TWO_THIRDS
        if not isinstance(gap, (int, float)) or gap < TWO_THIRDS - 1e-12:
            ck.errors.append(("kernel.lattice.gap", f"gap must be >= 2/3, got {gap!r}"))
    ck.number(doc, "cube.R", lo=0.0, strict_lo=True)
    ck.number(doc, "cube.S", lo=0.0, strict_lo=True)
    ck.integer(doc, "grid.nx", lo=1)
    ck.integer(doc, "grid.nt", lo=1)
    ck.number(doc, "grid.pad", lo=0.0)
    p = ck.number(doc, "exponents.p", lo=1.0)
    q = ck.number(doc, "exponents.q", lo=1.0)
    ck.number(doc, "delta", lo=0.0)
    d = _get(doc, "delta")
    if isinstance(d, (int, float)) and not d < 1.0:
        ck.errors.append(("delta", f"must be < 1, got {d}"))
    ck.number(doc, "mu", lo=0.0, strict_lo=True)
    mu = _get(doc, "mu")
    if isinstance(mu, (int, float)) and not mu < 1.0:
        ck.errors.append(("mu", f"must be < 1, got {mu}"))
    ck.number(doc, "eta", lo=0.0, strict_lo=True)
    ck.number(doc, "frame.B", lo=0.0, strict_lo=True)
    ck.number(doc, "frame.C", lo=0.0, strict_lo=True)
    ck.number(doc, "decay.alpha", allow_none=True)
    ck.number(doc, "decay.beta", allow_none=True)
    ck.integer(doc, "resolution.constants", lo=8)
    ck.integer(doc, "resolution.functionals", lo=12)
    eps = ck.number(doc, "epsilon", lo=0.0, strict_lo=True)
    if isinstance(eps, (int, float)) and not eps < 1.0:
        ck.errors.append(("epsilon", f"must be < 1, got {eps}"))
    for axis in ("l", "m"):
        vals = _get(doc, f"sweep.{axis}")
        if not isinstance(vals, list) or not vals or any(
            not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in vals
        ):
            ck.errors.append((f"sweep.{axis}", f"expected a nonempty list of positive ints, got {vals!r}"))
    for axis in ("R", "S", "delta", "mu"):
        vals = _get(doc, f"sweep.{axis}")
        if vals is None:
            continue
        if not isinstance(vals, list) or any(
            not isinstance(v, (int, float)) or isinstance(v, bool) for v in vals
        ):
            ck.errors.append((f"sweep.{axis}", f"expected null or a list of numbers, got {vals!r}"))
    ck.integer(doc, "trials", lo=0)
    ck.integer(doc, "seed", lo=0)
    ck.integer(doc, "threads", lo=1)
    if not isinstance(_get(doc, "out_dir"), str) or not _get(doc, "out_dir"):
        ck.errors.append(("out_dir", f"expected a nonempty string, got {_get(doc, 'out_dir')!r}"))
    ck.integer(doc, "family.count", lo=1)
    ck.integer(doc, "family.singles", lo=0)
    ck.integer(doc, "family.seed", lo=0)
    ck.number(doc, "reconstruct.theta", lo=0.0, strict_lo=True)
    tol = _get(doc, "reconstruct.tol")
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or (
        isinstance(tol, (int, float)) and not (tol > 0)
    ):
        ck.errors.append(("reconstruct.tol", f"expected a positive number (inf allowed), got {tol!r}"))
    ck.integer(doc, "reconstruct.r_max", lo=1)
    skind = ck.choice(doc, "reconstruct.samples.kind", {"grid", "random"})
    if skind == "grid":
        ck.integer(doc, "reconstruct.samples.per_spatial", lo=1)
        ck.integer(doc, "reconstruct.samples.per_temporal", lo=1)
    elif skind == "random":
        ck.integer(doc, "reconstruct.samples.l", lo=1)
        ck.integer(doc, "reconstruct.samples.m", lo=1)
        ck.integer(doc, "reconstruct.samples.seed", lo=0)
    tkind = ck.choice(doc, "reconstruct.truth.kind", {"random", "single"})
    if tkind == "random":
        ck.integer(doc, "reconstruct.truth.seed", lo=0)
    # cross-field: the study cube must fit inside the padded grid
    if not ck.errors:
        if _get(doc, "grid.pad") <= 0:
            ck.errors.append(("grid.pad", "grid must strictly contain the study cube (pad > 0)"))
    return ck.errors


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; builders construct the core objects."""

    doc: dict

    @property
    def n(self) -> int:
        return self.doc["kernel"]["n"]

    def cube(self, R=None, S=None) -> Cube:
        c = self.doc["cube"]
        return Cube(R if R is not None else c["R"], S if S is not None else c["S"], self.n)

    def exponents(self) -> Exponents:
        e = self.doc["exponents"]
        return Exponents(float(e["p"]), float(e["q"]))

    def amplitude(self) -> float:
        amp = self.doc["kernel"]["amplitude"]
        return normalize_phi(self.n) if amp == "normalized" else float(amp)

    def phi(self) -> GeneratorPhi:
        return GeneratorPhi(self.n, self.amplitude())

    def lattice(self, cube: Cube | None = None) -> Lattice:
        spec = self.doc["kernel"]["lattice"]
        if spec["kind"] == "scaled_grid":
            return default_lattice(cube or self.cube(), spec["spacing"], spec["pad"])
        if spec["kind"] == "explicit":
            return Lattice(np.asarray(spec["nodes"], dtype=float), spec.get("gap") or TWO_THIRDS)
        return Lattice(np.zeros((0, self.n + 1)), TWO_THIRDS)

    def kernel(self, cube: Cube | None = None) -> Kernel:
        return Kernel(self.phi(), self.lattice(cube))

    def grid(self, cube: Cube | None = None) -> Grid:
        g = self.doc["grid"]
        padded = (cube or self.cube()).padded(g["pad"])
        return Grid(padded, g["nx"], g["nt"])

    def sweep_points(self):
        """Cartesian product of the sweep axes (fixed-config values fill gaps)."""
        sw = self.doc["sweep"]
        ls = sw["l"]
        ms = sw["m"]
        rs = sw["R"] or [self.doc["cube"]["R"]]
        ss = sw["S"] or [self.doc["cube"]["S"]]
        ds = sw["delta"] if sw["delta"] is not None else [self.doc["delta"]]
        mus = sw["mu"] if sw["mu"] is not None else [self.doc["mu"]]
        for R in rs:
            for S in ss:
                for d in ds:
                    for mu in mus:
                        for l in ls:
                            for m in ms:
                                yield {"l": l, "m": m, "R": float(R), "S": float(S), "delta": float(d), "mu": float(mu)}

    def canonical_json(self) -> str:
        return json.dumps(self.doc, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def load_config(source) -> ExperimentConfig:
    """Load and validate a config from a path, JSON/YAML text, or dict.

    Missing fields take the documented defaults; unknown fields and every
    invalid value are collected into one ConfigError.
    """
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        text = Path(source).read_text()
        if str(source).endswith((".yaml", ".yml")):
            import yaml

            raw = yaml.safe_load(text) or {}
        else:
            raw = json.loads(text)
    elif isinstance(source, str):
        raw = json.loads(source)
    elif isinstance(source, dict):
        raw = source
    else:
        raise TypeError(f"cannot load config from {type(source)!r}")
    if not isinstance(raw, dict):
        raise ConfigError([("", "config document must be a mapping")])
    errors: list = []
    doc = _merge(DEFAULT_CONFIG, raw, errors)
    errors.extend(_validate(doc))
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(doc)
