"""Benchmark the sparse Cholesky kernels: compiled vs pure-numpy backend.

Runs the same workload twice in subprocesses, once as installed (numba) and
once with OSCGMRF_NO_NUMBA=1, and prints a comparison table.  The workload
is the hot path of a posterior evaluation: symbolic analysis, repeated
numeric refactorization, a 100-right-hand-side triangular solve pair and a
batch of samples, all on the joint precision of a Table-1-style model.

Usage: python benchmarks/bench_cholesky.py [--nx 40] [--repeat 5]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time


def workload(nx: int, repeat: int) -> dict[str, float]:
    import numpy as np

    from oscgmrf import (
        ModelSpec,
        NoiseSpec,
        OperatorSpec,
        SymbolicFactor,
        assemble,
        build_regular_mesh,
        sample,
        system_precision,
    )

    mesh = build_regular_mesh(nx, nx, extent=(0.0, float(nx - 1), 0.0, float(nx - 1)))
    model = ModelSpec(
        operator=OperatorSpec(variant="L1", b11=0.5, b21=0.25, b22=1.0,
                              h11=0.25, h22=0.36),
        noise1=NoiseSpec(kind="matern", kappa_n=0.5),
        noise2=NoiseSpec(kind="oscillating", kappa_n=0.6, omega=0.95),
    )
    gmrf = system_precision(assemble(mesh), model)
    Q = gmrf.Q

    def best(fn, n=repeat):
        times = []
        for _ in range(n):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    results: dict[str, float] = {"n": Q.shape[0], "nnz_q": Q.nnz}

    sym = SymbolicFactor(Q)  # warm-up: triggers jit compilation too
    factor = sym.factorize(Q)
    results["nnz_l"] = factor.factor_nnz

    results["symbolic"] = best(lambda: SymbolicFactor(Q), max(2, repeat // 2))
    results["refactorize"] = best(lambda: sym.factorize(Q))

    rng = np.random.default_rng(1)
    B = rng.standard_normal((Q.shape[0], 100))
    factor.solve(B[:, 0])
    results["solve_100rhs"] = best(lambda: factor.solve(B))
    results["sample_50"] = best(lambda: sample(gmrf, count=50, seed=2), max(2, repeat // 2))
    return results


TASKS = ("symbolic", "refactorize", "solve_100rhs", "sample_50")


def run_child(nx: int, repeat: int, no_numba: bool) -> dict[str, float]:
    env = dict(os.environ)
    if no_numba:
        env["OSCGMRF_NO_NUMBA"] = "1"
    else:
        env.pop("OSCGMRF_NO_NUMBA", None)
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--child",
         "--nx", str(nx), "--repeat", str(repeat)],
        capture_output=True, text=True, env=env, check=True,
    )
    values: dict[str, float] = {}
    for line in out.stdout.splitlines():
        key, _, val = line.partition("=")
        if key == "backend":
            values[key] = val
        elif val:
            values[key] = float(val)
    return values


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=40, help="mesh is nx x nx per field")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        from oscgmrf import BACKEND

        values = workload(args.nx, args.repeat)
        print(f"backend={BACKEND}")
        for key, val in values.items():
            print(f"{key}={val}")
        return

    print(f"workload: {args.nx}x{args.nx} grid per field, best of {args.repeat}")
    fast = run_child(args.nx, args.repeat, no_numba=False)
    slow = run_child(args.nx, args.repeat, no_numba=True)
    print(f"system size {int(fast['n'])}, nnz(Q) {int(fast['nnz_q'])}, "
          f"nnz(L) {int(fast['nnz_l'])}")
    print(f"backends: {fast['backend']} vs {slow['backend']}")
    print(f"{'task':<14} {fast['backend']:>12} {slow['backend']:>12} {'speedup':>9}")
    for task in TASKS:
        ratio = slow[task] / fast[task]
        print(f"{task:<14} {fast[task]*1e3:>10.1f}ms {slow[task]*1e3:>10.1f}ms {ratio:>8.1f}x")


if __name__ == "__main__":
    main()
