"""Time the compiled row kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows 1025] [--n 1000] [--repeat 5]

Each kernel reduces a ``rows x n`` matrix of goal values (one row per grid
point) to one risk value per row, which is the inner loop of the grid solver.
"""

import argparse
import math
import timeit

import numpy as np

from saarb import _kernels
from saarb.risk import PhiFamily


def cases(M, alpha=0.5):
    n = M.shape[1]
    k = math.ceil(alpha * n)
    c = math.ceil(n * (1 - alpha))
    lo = -M.max(axis=1) - 1.0
    hi = -M.min(axis=1) + 1.0
    ent = PhiFamily.entropic()
    return {
        "mean": lambda b: b.row_mean(M),
        "semideviation": lambda b: b.row_semideviation(M, 1.5, 0.5),
        "avar": lambda b: b.row_avar(M, alpha, k),
        "oce_avar": lambda b: b.row_oce_avar(M, alpha, c, lo, hi),
        "oce_entropic": lambda b: (b.row_oce_entropic(M, lo, hi, 1e-10) if hasattr(b, "row_oce_entropic")
                                   else b.row_oce_golden(M, ent.phi_star, lo, hi, 1e-10)),
    }


def run(rows: int, n: int, repeat: int, seed: int = 0) -> list:
    M = np.random.default_rng(seed).normal(size=(rows, n))
    backends = [_kernels.get_backend(name) for name in _kernels.available()]
    out = []
    for name, fn in cases(M).items():
        times = {}
        for b in backends:
            fn(b)  # warm up
            times[b.name] = min(timeit.repeat(lambda: fn(b), number=1, repeat=repeat))
        out.append((name, times))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=1025)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"backends: {', '.join(_kernels.available())}; matrix {args.rows} x {args.n}; best of {args.repeat}")
    print(f"{'kernel':<14}{'python [ms]':>13}{'compiled [ms]':>15}{'speedup':>10}")
    for name, t in run(args.rows, args.n, args.repeat):
        py, cc = t["python"], t.get("compiled")
        if cc is None:
            print(f"{name:<14}{py * 1e3:>13.2f}{'-':>15}{'-':>10}")
        else:
            print(f"{name:<14}{py * 1e3:>13.2f}{cc * 1e3:>15.2f}{py / cc:>9.1f}x")


if __name__ == "__main__":
    main()
