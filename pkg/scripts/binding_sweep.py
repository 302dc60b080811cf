"""Flip-attack escape rate against code distance (repetition codes)."""

from __future__ import annotations

import argparse

from osqbc.harness import ExperimentConfig, sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--d", type=int, nargs="+", default=[3, 5, 7])
    args = ap.parse_args()

    cfg = ExperimentConfig(
        scenario="alice_flip", code="repetition:3", alpha=args.alpha, alpha_abort=False, trials=args.trials, seed=args.seed
    )
    print("d,escape_rate,stderr,analytic")
    for d, rep in zip(args.d, sweep(cfg, "d", args.d)):
        m = rep.metrics["escape_rate"]
        print(f"{d},{m['mean']:.6f},{m['stderr']:.6f},{(1 - args.alpha) ** d:.6f}")


if __name__ == "__main__":
    main()
