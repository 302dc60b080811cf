"""Abort rate and Bob's learned bits as Bob raises his intercept rate."""

from __future__ import annotations

import argparse

import numpy as np

from osqbc.harness import ExperimentConfig, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--code", default="hamming7")
    ap.add_argument("--s", type=int, default=5000)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("alpha_attack,abort_rate,learned_bits,alpha_estimate")
    for j, a in enumerate(np.round(np.arange(0.1, 1.0, 0.1), 2)):
        cfg = ExperimentConfig(scenario="bob_intercept", code=args.code, s=args.s, alpha_attack=float(a),
                               trials=args.trials, seed=args.seed)
        rep = run_experiment(cfg, prefix=(j,))
        m = rep.metrics
        print(f"{a},{m['abort_rate']['mean']:.4f},{m['learned_bits']['mean']:.3f},{m['alpha_estimate']['mean']:.4f}")


if __name__ == "__main__":
    main()
