"""Timing of the bundled simplex on larger random LPs, vs scipy."""

import os
import sys
import time

import numpy as np
from scipy.optimize import linprog

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gridfire.milp.simplex import StandardLp, USING_NUMBA


def main():
    rng = np.random.default_rng(7)
    for m, n in [(100, 150), (300, 400), (600, 800), (1000, 1400)]:
        a = rng.normal(size=(m, n))
        a[rng.random(size=(m, n)) < 0.9] = 0.0
        senses = rng.integers(0, 3, size=m).astype(np.int8)
        c = rng.normal(size=n)
        lo = np.zeros(n)
        hi = np.full(n, 10.0)
        x0 = rng.uniform(0, 2, n)
        rhs = a @ x0 + np.where(senses == 0, 0.5, np.where(senses == 1, -0.5, 0.0))

        t = time.perf_counter()
        std = StandardLp(a, senses, rhs, c, lo, hi)
        res = std.solve()
        dt = time.perf_counter() - t

        lb = np.where(senses == 0, -np.inf, rhs)
        ub = np.where(senses == 1, np.inf, rhs)
        a_ub = np.vstack([a[np.isfinite(ub)], -a[np.isfinite(lb)]])
        b_ub = np.concatenate([ub[np.isfinite(ub)], -lb[np.isfinite(lb)]])
        t = time.perf_counter()
        ref = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=list(zip(lo, hi)), method="highs")
        dt2 = time.perf_counter() - t

        ok = "?"
        if ref.status == 0 and res.status == "optimal":
            ok = f"diff={abs(res.objective - ref.fun):.2e}"
        elif ref.status != 0:
            ok = f"scipy={ref.status} mine={res.status}"
        print(f"m={m:5d} n={n:5d} mine={dt:7.2f}s ({res.pivots:6d} piv) scipy={dt2:6.2f}s {ok}")

        # warm restart after a small bound change
        lo2 = std.lo0.copy()
        hi2 = std.hi0.copy()
        hi2[0] = std.scaled_bound(0, 1.0)
        t = time.perf_counter()
        res2 = std.solve(lo2, hi2, warm=(res.basis, res.vstat))
        dtw = time.perf_counter() - t
        res3 = std.solve(lo2, hi2)
        assert res2.status == res3.status
        if res2.status == "optimal":
            assert abs(res2.objective - res3.objective) < 1e-7 * (1 + abs(res3.objective))
        print(f"      warm resolve: {dtw:7.3f}s ({res2.pivots} piv, cold {res3.pivots})")


if __name__ == "__main__":
    main()
