#!/usr/bin/env python3
"""Run the full desk-scale experiment battery into out/demo/.

Fast variant of the canonical configuration (small sweep, 100 trials);
see scripts/configs/desk.json for the full-size run.
"""

import json
import sys
from pathlib import Path

from rksampling.cli import main

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "out" / "demo"


def run():
    desk = HERE / "configs" / "desk.json"
    demo = HERE / "configs" / "reconstruct_demo.json"
    rc = 0
    rc |= main(["kernel-check", "--config", str(desk), "--out", str(OUT / "kernel-check")])
    rc |= main(["bounds", "--config", str(desk), "--out", str(OUT / "bounds")])
    rc |= main([
        "sample-sweep", "--config", str(desk), "--out", str(OUT / "sweep"), "--trials", "100",
    ])
    rc |= main(["reconstruct", "--config", str(demo), "--out", str(OUT / "reconstruct")])
    summary = json.loads((OUT / "reconstruct" / "summary.json").read_text())
    print(
        f"\ndemo complete -> {OUT}\n"
        f"reconstruction: converged={summary['converged']} in {summary['iterations']} iterations, "
        f"final relative error {summary['final_rel_error']:.3e}"
    )
    return rc


if __name__ == "__main__":
    sys.exit(run())
