"""Benchmark the compiled oracle kernels against the NumPy fallback.

Runs the hot kernel (penalized mirror-descent solve) on a family of random
instances with both implementations and prints wall time and agreement.

Usage:
    python benchmarks/bench_backends.py [--nx 4] [--repeats 5]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from rdclab.oracle import _pure

try:
    from rdclab import _speedups
except ImportError:
    _speedups = None

INF = math.inf


def make_instance(rng, nx):
    px = rng.dirichlet(np.ones(nx))
    delta = rng.uniform(0, 1, size=(nx, nx))
    np.fill_diagonal(delta, 0.0)
    chan = rng.dirichlet(np.ones(2), size=nx)
    offs = np.array([0, 2], dtype=np.int64)
    Q0 = rng.dirichlet(np.ones(nx), size=nx)
    return px, delta, np.ascontiguousarray(chan), offs, Q0


def run(impl, instances):
    t0 = time.perf_counter()
    rates = []
    for px, delta, cat, offs, Q0 in instances:
        bq, br, mv, _ = impl.descent_run(
            px, delta, cat, offs, 0.25, INF, np.array([0.9]), Q0,
            rounds=8, steps=150, lr0=0.5, lr_decay=0.7, mu0=4.0,
            mu_growth=3.0, feas_tol=1e-7,
        )
        rates.append(br if bq is not None else math.nan)
    return time.perf_counter() - t0, rates


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=4, help="alphabet size")
    ap.add_argument("--repeats", type=int, default=5, help="instances per backend")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    instances = [make_instance(rng, args.nx) for _ in range(args.repeats)]

    t_pure, r_pure = run(_pure, instances)
    print(f"numpy    : {t_pure:8.3f} s  ({t_pure / args.repeats:.3f} s/solve)")

    if _speedups is None:
        print("compiled : extension not built; skipping")
        return

    t_fast, r_fast = run(_speedups, instances)
    print(f"compiled : {t_fast:8.3f} s  ({t_fast / args.repeats:.3f} s/solve)")
    print(f"speedup  : {t_pure / t_fast:8.1f}x")
    diffs = [
        abs(a - b)
        for a, b in zip(r_pure, r_fast)
        if not (math.isnan(a) and math.isnan(b))
    ]
    print(f"max |rate diff| : {max(diffs):.3e}" if diffs else "no finite rates")


if __name__ == "__main__":
    main()
