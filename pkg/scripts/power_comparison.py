"""Power of the l2 and l_inf tests against sparse and dense alternatives (Gaussian data, Omega = I).

Prints a small table over a grid of signal strengths.
"""

import argparse
import math

from hdlpboot.simharness import SimConfig, run_power_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=100)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--B", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    d, n = args.d, args.n
    sparse = [c * math.sqrt(math.log(d) / n) for c in (0.5, 1.0, 2.0, 3.0)]
    dense = [c / math.sqrt(n) for c in (0.25, 0.5, 1.0, 3.0)]
    print(f"{'alt':>6} {'delta':>8} {'l2':>6} {'linf':>6}")
    for label, s, deltas in (("sparse", 1, sparse), ("dense", d, dense)):
        for delta in deltas:
            row = []
            for stat in ("l2", "linf"):
                cfg = SimConfig(dgp="gaussian", d=d, n=n, B=args.B, reps=args.reps, stat=stat,
                                method="gaussian", alpha=(0.05,), alt=f"{s}:{delta!r}",
                                seed=args.seed, workers=args.workers)
                row.append(run_power_experiment(cfg).at(0.05))
            print(f"{label:>6} {delta:8.4f} {row[0]:6.3f} {row[1]:6.3f}")


if __name__ == "__main__":
    main()
