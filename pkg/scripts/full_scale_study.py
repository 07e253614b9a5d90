"""Full-scale size study: four DGPs, several (d, n), 99 levels, B=5000, 1000 replications.

This is a long run (hours on a workstation). Use --quick for a reduced grid.
Each configuration is written as a CSV under --outdir; existing files are skipped.
"""

import argparse
import itertools
import os

from hdlpboot.simharness import SimConfig, run_size_experiment

PANELS = [
    # (dgp, stat, methods, cov, dims)
    ("equicorr", "l2", ("gaussian", "spherical"), "naive", (100, 500, 1000)),
    ("equicorr", "linf", ("gaussian", "spherical"), "naive", (100, 500, 1000)),
    ("toeplitz", "l2", ("gaussian", "spherical"), "naive", (100, 500, 1000)),
    ("toeplitz", "linf", ("gaussian", "spherical"), "naive", (100, 500, 1000)),
    ("toeplitz", "w", ("gaussian", "spherical"), "naive", (100, 500, 1000)),
    ("t4toeplitz", "v", ("gaussian", "spherical"), "naive", (500, 1000, 5000)),
    ("banded", "l2", ("gaussian", "spherical"), "band", (100, 500, 1000)),
    ("banded", "linf", ("gaussian", "spherical"), "band", (100, 500, 1000)),
    ("banded", "l2", ("gaussian", "spherical"), "naive", (100, 500, 1000)),
    ("banded", "linf", ("gaussian", "spherical"), "naive", (100, 500, 1000)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--outdir", default="results/full")
    ap.add_argument("--B", type=int, default=5000)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--quick", action="store_true", help="d=100, n=50, B=1000, reps=200")
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    ns = (50,) if args.quick else (20, 50, 100)
    B, reps = (1000, 200) if args.quick else (args.B, args.reps)
    for dgp, stat, methods, cov, dims in PANELS:
        dims = dims[:1] if args.quick else dims
        for d, n, method in itertools.product(dims, ns, methods):
            name = f"{dgp}_{stat}_{method}_{cov}_d{d}_n{n}.csv"
            path = os.path.join(args.outdir, name)
            if os.path.exists(path):
                continue
            cfg = SimConfig(dgp=dgp, d=d, n=n, B=B, reps=reps, stat=stat, method=method,
                            cov=None if stat == "v" else cov, alpha="grid99",
                            seed=args.seed, workers=args.workers)
            curve = run_size_experiment(cfg)
            with open(path, "w") as fh:
                fh.write(curve.to_csv())
            print(f"{name}: a(0.05)={curve.at(0.05):.3f} a(0.10)={curve.at(0.10):.3f} [{curve.wall_time:.0f}s]",
                  flush=True)


if __name__ == "__main__":
    main()
