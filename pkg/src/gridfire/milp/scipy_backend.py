"""Alternative solver backend built on scipy's HiGHS bindings.

Interface-compatible with :class:`gridfire.milp.BranchBoundBackend`. The
bundled solver stays the default and the reference implementation; this
adapter exists so the test suite can cross-check both solvers on the same
problems, and as an escape hatch for models that outgrow the bundled code.
"""

from __future__ import annotations

import math

import numpy as np

from .problem import MilpError, MilpProblem, MilpSolution, SolveOptions


class ScipyBackend:
    """Solve a MilpProblem with scipy.optimize.milp (HiGHS)."""

    def solve(self, problem: MilpProblem, options: SolveOptions | None = None) -> MilpSolution:
        try:
            from scipy import optimize
        except ImportError as exc:  # pragma: no cover
            raise MilpError("scipy is required for ScipyBackend") from exc

        opts = options or SolveOptions()
        a, senses, rhs, c, lo, hi, isbin = problem.to_arrays()
        sign = -1.0 if problem.objective_sense == "max" else 1.0
        nvars = a.shape[1]
        if opts.dump_lp:
            problem.write_lp(opts.dump_lp)

        milp_kwargs = {
            "c": sign * c if nvars else np.zeros(0),
            "integrality": isbin.astype(np.int64),
            "bounds": optimize.Bounds(lo, hi),
            "options": {
                "mip_rel_gap": opts.rel_gap,
                "node_limit": opts.node_limit,
            },
        }
        if opts.time_limit is not None:
            milp_kwargs["options"]["time_limit"] = opts.time_limit
        if a.shape[0]:
            lb = np.where(senses == 0, -np.inf, rhs)
            ub = np.where(senses == 1, np.inf, rhs)
            milp_kwargs["constraints"] = optimize.LinearConstraint(a, lb, ub)
        res = optimize.milp(**milp_kwargs)

        const = problem.objective_constant
        if res.status == 0:
            vals = np.asarray(res.x, dtype=np.float64)
            vals[isbin] = np.round(vals[isbin])
            np.clip(vals, lo, hi, out=vals)
            obj = float(c @ vals) + const
            bound = sign * float(res.mip_dual_bound) + const if res.mip_dual_bound is not None else obj
            return MilpSolution(
                status="optimal", objective=obj, values=vals,
                best_bound=bound, nodes=int(res.mip_node_count or 0), pivots=0,
            )
        if res.status == 2:
            return MilpSolution(
                status="infeasible", objective=math.nan,
                values=np.full(nvars, math.nan), best_bound=math.nan, nodes=0, pivots=0,
            )
        if res.status == 3:
            return MilpSolution(
                status="unbounded",
                objective=-math.inf if problem.objective_sense == "min" else math.inf,
                values=np.full(nvars, math.nan), best_bound=math.nan, nodes=0, pivots=0,
            )
        if res.status == 1:
            vals = None
            if res.x is not None:
                vals = np.asarray(res.x, dtype=np.float64)
            obj = float(c @ vals) + const if vals is not None else math.nan
            return MilpSolution(
                status="node_limit", objective=obj,
                values=vals if vals is not None else np.full(nvars, math.nan),
                best_bound=math.nan, nodes=int(res.mip_node_count or 0), pivots=0,
            )
        raise MilpError(f"scipy milp returned unexpected status {res.status}: {res.message}")
