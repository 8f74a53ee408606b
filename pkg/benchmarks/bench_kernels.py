#!/usr/bin/env python3
"""Benchmark the compiled Taylor kernels against the numpy fallback.

Times the two hot primitives (truncated product and order-by-order quotient)
at representative table sizes, plus an end-to-end per-point geometry
evaluation in a subprocess per backend.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from finslerlab import _kernels_py
from finslerlab._multi_index import tables

try:
    from finslerlab import _kernels_cy
except ImportError:
    _kernels_cy = None

_GEO_SNIPPET = """
import time
import numpy as np
from finslerlab import finsler as F
from finslerlab import connection as C
from finslerlab.backend import BACKEND

ran = F.randers(2, 0.3)
pts = F.sample_points(ran, 40, seed=1)
C.base_geometry(ran, pts[0])  # warm up table caches
t0 = time.perf_counter()
for pt in pts:
    C.base_geometry(ran, pt)
dt = (time.perf_counter() - t0) / len(pts)
print(f"{BACKEND} {dt*1e3:.3f}")
"""


def time_kernel(fn, *args, repeats=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench_tables(repeats):
    rng = np.random.default_rng(0)
    print(f"{'case':<28}{'numpy':>12}{'cython':>12}{'speedup':>10}")
    for num_vars, order in [(4, 3), (4, 6), (6, 3), (6, 6)]:
        tab = tables(num_vars, order)
        a = rng.uniform(-1, 1, tab.n_terms)
        b = rng.uniform(-1, 1, tab.n_terms)
        b[0] = 2.0
        ia, ib, iout = tab.mul_table()
        ic, ibd, out_ptr = tab.div_table()
        for name, args in (
            (f"mul v={num_vars} K={order} ({len(ia)} triples)", (a, b, ia, ib, iout, tab.n_terms)),
            (f"div v={num_vars} K={order}", None),
        ):
            if args is not None:
                t_py = time_kernel(_kernels_py.mul, *args, repeats=repeats)
                t_cy = (
                    time_kernel(_kernels_cy.mul, *args, repeats=repeats)
                    if _kernels_cy
                    else float("nan")
                )
            else:
                t_py = time_kernel(_kernels_py.div, a, b, ic, ibd, out_ptr, repeats=repeats)
                t_cy = (
                    time_kernel(_kernels_cy.div, a, b, ic, ibd, out_ptr, repeats=repeats)
                    if _kernels_cy
                    else float("nan")
                )
            speed = t_py / t_cy if _kernels_cy else float("nan")
            print(f"{name:<28}{t_py*1e6:>10.1f}us{t_cy*1e6:>10.1f}us{speed:>9.1f}x")


def bench_geometry():
    print("\nper-point full geometry evaluation (Randers, p=2, order 6):")
    for force_py in (False, True):
        env = dict(os.environ)
        env.pop("FINSLERLAB_PURE_PYTHON", None)
        if force_py:
            env["FINSLERLAB_PURE_PYTHON"] = "1"
        out = subprocess.run(
            [sys.executable, "-c", _GEO_SNIPPET], env=env, capture_output=True, text=True
        )
        if out.returncode != 0:
            print(out.stderr)
            continue
        backend, ms = out.stdout.split()
        print(f"  {backend:<8} {ms} ms/point")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    if _kernels_cy is None:
        print("compiled kernels not built; timing the numpy fallback only\n")
    bench_tables(args.repeats)
    bench_geometry()


if __name__ == "__main__":
    main()
