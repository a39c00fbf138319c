"""Quick differential check of the bundled simplex against scipy.linprog."""

import os
import sys
import time

import numpy as np
from scipy.optimize import linprog

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gridfire.milp.simplex import StandardLp, USING_NUMBA


def random_lp(rng, m, n):
    a = rng.normal(size=(m, n))
    a[rng.random(size=(m, n)) < 0.5] = 0.0
    a *= np.exp2(rng.integers(-3, 4, size=(m, n)))
    senses = rng.integers(0, 3, size=m)
    c = rng.normal(size=n) * np.exp2(rng.integers(-2, 5, size=n))
    lo = np.where(rng.random(n) < 0.8, rng.uniform(-5, 0, n), -np.inf)
    hi = np.where(rng.random(n) < 0.8, rng.uniform(0.5, 6, n), np.inf)
    # rhs anchored at a random feasible-ish point to avoid all-infeasible draws
    x0 = rng.uniform(-1, 1, n)
    rhs = a @ x0 + rng.normal(scale=0.5, size=m)
    return a, senses.astype(np.int8), rhs, c, lo, hi


def main():
    rng = np.random.default_rng(42)
    n_match = n_inf = n_unb = 0
    t_mine = t_scipy = 0.0
    trials = 300
    for k in range(trials):
        m = int(rng.integers(1, 25))
        n = int(rng.integers(1, 30))
        a, senses, rhs, c, lo, hi = random_lp(rng, m, n)

        t = time.perf_counter()
        std = StandardLp(a, senses, rhs, c, lo, hi)
        res = std.solve()
        t_mine += time.perf_counter() - t

        t = time.perf_counter()
        lb = np.where(senses == 0, -np.inf, rhs)
        ub = np.where(senses == 1, np.inf, rhs)
        a_ub = np.vstack([a[np.isfinite(ub)], -a[np.isfinite(lb)]])
        b_ub = np.concatenate([ub[np.isfinite(ub)], -lb[np.isfinite(lb)]])
        ref = linprog(c, A_ub=a_ub, b_ub=b_ub,
                      bounds=list(zip(lo, hi)), method="highs")
        t_scipy += time.perf_counter() - t

        if ref.status == 0:
            assert res.status == "optimal", f"trial {k}: mine={res.status} scipy=optimal"
            num = abs(res.objective - ref.fun)
            den = 1.0 + abs(ref.fun)
            assert num / den < 1e-7, f"trial {k}: obj {res.objective} vs {ref.fun}"
            # verify primal feasibility of our point independently
            ax = a @ res.x
            viol = 0.0
            viol = max(viol, float(np.max(np.where(senses == 0, ax - rhs, 0.0), initial=0.0)))
            viol = max(viol, float(np.max(np.where(senses == 1, rhs - ax, 0.0), initial=0.0)))
            viol = max(viol, float(np.max(np.where(senses == 2, np.abs(ax - rhs), 0.0), initial=0.0)))
            viol = max(viol, float(np.max(lo - res.x, initial=0.0)))
            viol = max(viol, float(np.max(res.x - hi, initial=0.0)))
            assert viol < 1e-6, f"trial {k}: feasibility violation {viol}"
            n_match += 1
        elif ref.status == 2:
            assert res.status == "infeasible", f"trial {k}: mine={res.status} scipy=infeasible"
            n_inf += 1
        elif ref.status == 3:
            assert res.status == "unbounded", f"trial {k}: mine={res.status} scipy=unbounded"
            n_unb += 1
        else:
            raise AssertionError(f"scipy status {ref.status}")

    print(f"numba={USING_NUMBA} trials={trials} optimal={n_match} infeasible={n_inf} "
          f"unbounded={n_unb} t_mine={t_mine:.2f}s t_scipy={t_scipy:.2f}s")


if __name__ == "__main__":
    main()
