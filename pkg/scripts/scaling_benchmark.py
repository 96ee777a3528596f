"""Per-iteration wall time of the alternating solver as the latent width m doubles.

Times single W -> P -> F sweeps from a fixed start and reports the best of
several repeats, plus the ratio between consecutive widths.

Usage: python3 scripts/scaling_benchmark.py [--widths 64 128 256 512] [--n 1000]
"""
import argparse
import time

import numpy as np

from semsub.solver import SolverConfig, aidc_step, init_state


def per_iteration_seconds(m, k, n, repeats, sweeps):
    rng = np.random.default_rng(7)
    z = rng.standard_normal((m, n)) / np.sqrt(n)
    s = rng.standard_normal((m, k))
    s /= np.linalg.norm(s, axis=0)
    state = init_state(z, s, SolverConfig())
    best = np.inf
    for _ in range(repeats):
        st = state
        start = time.perf_counter()
        for _ in range(sweeps):
            st = aidc_step(z, st, s, 0.5, 1.0)
        best = min(best, (time.perf_counter() - start) / sweeps)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--widths", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--sweeps", type=int, default=10)
    args = ap.parse_args()

    prev = None
    print(f"{'m':>6}{'ms/iter':>10}{'ratio':>8}")
    for m in args.widths:
        t = per_iteration_seconds(m, args.k, args.n, args.repeats, args.sweeps)
        ratio = "" if prev is None else f"{t / prev:.2f}"
        print(f"{m:>6}{1e3 * t:>10.3f}{ratio:>8}")
        prev = t


if __name__ == "__main__":
    main()
