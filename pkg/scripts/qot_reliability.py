"""Honest vs honest-but-curious QOT reliability, with the analytic POVM value."""

from __future__ import annotations

import argparse

from osqbc import qot
from osqbc.harness import ExperimentConfig, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    for mode, n in (("honest", 40), ("curious", 8)):
        cfg = ExperimentConfig(scenario="qot", qot_mode=mode, qot_n=n, trials=args.trials, seed=args.seed)
        m = run_experiment(cfg, workers=args.workers).metrics["correct"]
        print(f"{mode:8s} n={n:3d}  {m['mean']:.4f} +/- {m['stderr']:.4f}")
    print(f"analytic POVM      {qot.povm_reliability(qot.optimal_povm()):.7f}")


if __name__ == "__main__":
    main()
