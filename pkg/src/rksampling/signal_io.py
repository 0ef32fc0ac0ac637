"""Columnar on-disk format for grid signals.

Layout (single file): one JSON header line terminated by ``\n``, then the
payload.  The header records the cube, grid shape, and payload kind:

    {"format": "gsig1", "cube": {"R": ..., "S": ..., "n": ...},
     "nx": ..., "nt": ..., "payload": "f64le" | "csv"}

* ``f64le``: raw little-endian float64 values, C (row-major) order over the
  grid shape, spatial axes first, temporal axis last.
* ``csv``: one value per line in the same flat order, 17 significant digits.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mixed_norms import Cube, Grid, GridSignal

__all__ = ["save_signal", "load_signal"]


def save_signal(path, sig: GridSignal, payload: str = "f64le") -> None:
    if payload not in ("f64le", "csv"):
        raise ValueError(f"unknown payload kind {payload!r}")
    g = sig.grid
    header = {
        "format": "gsig1",
        "cube": {"R": g.cube.R, "S": g.cube.S, "n": g.cube.n},
        "nx": g.nx,
        "nt": g.nt,
        "payload": payload,
    }
    flat = np.ascontiguousarray(sig.values, dtype="<f8").ravel()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        if payload == "f64le":
            fh.write(flat.tobytes())
        else:
            lines = "\n".join(format(v, ".17g") for v in flat)
            fh.write(lines.encode("ascii") + b"\n")


def load_signal(path) -> GridSignal:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    header = json.loads(data[:nl].decode("ascii"))
    if header.get("format") != "gsig1":
        raise ValueError("not a gsig1 file")
    cube = Cube(header["cube"]["R"], header["cube"]["S"], header["cube"]["n"])
    grid = Grid(cube, header["nx"], header["nt"])
    body = data[nl + 1 :]
    if header["payload"] == "f64le":
        flat = np.frombuffer(body, dtype="<f8")
    elif header["payload"] == "csv":
        flat = np.array(
            [float(tok) for tok in body.decode("ascii").split()], dtype=float
        )
    else:
        raise ValueError(f"unknown payload kind {header['payload']!r}")
    return GridSignal(grid, flat.reshape(grid.shape).astype(float))
