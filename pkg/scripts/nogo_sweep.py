"""Trace distance, fidelity and best local-unitary cheat along a family that
moves Bob's reduced state from identical to orthogonal; then the orthogonal
dual-rail commitment itself."""

from __future__ import annotations

import argparse
import math

import numpy as np

from osqbc import codes, nogo


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--code", default="random:6:3:1")
    args = ap.parse_args()

    print("theta,trace_distance,fidelity,cheat_success")
    for row in nogo.sweep_rows(np.linspace(0, math.pi / 2, args.points)):
        print(",".join(f"{x:.9f}" for x in row))

    code = codes.code_from_spec(args.code)
    r = codes.draw_partition_key(code, np.random.default_rng(0))
    q0, q1 = nogo.orthogonal_commitment_pair(code, r)
    p0, p1 = nogo.bb84_style_pair()
    print(f"# equal reductions: cheat = {nogo.cheat_success(p0, p1):.12f}")
    print(f"# orthogonal encoding {code.name}: cheat = {nogo.cheat_success(q0, q1):.3e}")


if __name__ == "__main__":
    main()
