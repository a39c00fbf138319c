"""Best-first branch and bound for mixed-binary linear programs.

Node selection is best-first on the parent LP bound with FIFO tie-breaking,
branching picks the most fractional binary (ties go to the lowest variable
id), and every node LP warm-starts from its parent's optimal basis. A
fix-and-resolve rounding pass runs until a first incumbent exists, which
keeps the tree shallow on the well-behaved investment models this package
produces. All choices are deterministic, so repeated runs visit the same
tree and return bitwise-identical solutions.

Bound changes are stored as a linked chain of single-variable fixings, and
the (basis, vstat) warm-start arrays of a processed node are shared by both
children, so open-node memory stays modest even on deep trees.
"""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from .problem import MilpProblem, MilpSolution, SolveOptions
from .simplex import StandardLp

_INT_TOL = 1e-6


class BranchBoundBackend:
    """Default solver backend: the bundled simplex plus branch and bound."""

    def solve(self, problem: MilpProblem, options: SolveOptions | None = None) -> MilpSolution:
        return solve_branch_and_bound(problem, options)


def _apply_chain(chain, lo: np.ndarray, hi: np.ndarray) -> None:
    while chain is not None:
        parent, j, val = chain
        lo[j] = val
        hi[j] = val
        chain = parent


def solve_branch_and_bound(
    problem: MilpProblem, options: SolveOptions | None = None
) -> MilpSolution:
    opts = options or SolveOptions()
    a, senses, rhs, c, lo, hi, isbin = problem.to_arrays()
    maximize = problem.objective_sense == "max"
    sign = -1.0 if maximize else 1.0
    if opts.dump_lp:
        problem.write_lp(opts.dump_lp)

    std = StandardLp(a, senses, rhs, c, lo, hi, is_binary=isbin, maximize=maximize)
    lo_s, hi_s = std.default_bounds()
    bin_idx = np.flatnonzero(isbin)
    nvars = a.shape[1]
    const = problem.objective_constant
    t0 = time.monotonic()

    def finish(status: str, best_key: float, best_vals, bound_key: float, nodes: int, pivots: int) -> MilpSolution:
        if best_vals is None:
            obj = math.nan
            vals = np.full(nvars, math.nan)
        else:
            obj = sign * best_key + const
            vals = best_vals
        bb = sign * bound_key + const if math.isfinite(bound_key) else obj
        return MilpSolution(
            status=status, objective=obj, values=vals, best_bound=bb,
            nodes=nodes, pivots=pivots,
        )

    def snap(xs: np.ndarray) -> tuple[np.ndarray, float]:
        vals = xs.copy()
        vals[bin_idx] = np.round(vals[bin_idx])
        np.clip(vals, lo, hi, out=vals)
        key = sign * float(c @ vals)
        return vals, key

    best_vals = None
    best_key = math.inf  # min-form objective of the incumbent
    nodes_done = 0
    pivots = 0
    seq = 0
    heap = [(-math.inf, seq, None, None)]  # (bound, seq, chain, warm)
    saw_unbounded = False
    hit_node_limit = False
    hit_pivot_limit = False
    open_bound = math.inf

    while heap:
        bound, _, chain, warm = heapq.heappop(heap)
        gap = max(opts.abs_gap, opts.rel_gap * abs(best_key)) if math.isfinite(best_key) else opts.abs_gap
        if math.isfinite(best_key) and bound >= best_key - gap:
            open_bound = bound
            heap = []
            break
        if nodes_done >= opts.node_limit:
            hit_node_limit = True
            open_bound = bound
            break
        if opts.time_limit is not None and time.monotonic() - t0 > opts.time_limit:
            hit_node_limit = True
            open_bound = bound
            break
        if pivots >= opts.pivot_limit:
            hit_pivot_limit = True
            open_bound = bound
            break

        node_lo = lo_s.copy()
        node_hi = hi_s.copy()
        _apply_chain(chain, node_lo, node_hi)
        res = std.solve(node_lo, node_hi, warm=warm, pivot_limit=opts.pivot_limit)
        nodes_done += 1
        pivots += res.pivots
        if res.status == "infeasible":
            continue
        if res.status == "unbounded":
            saw_unbounded = True
            break
        node_key = res.objective
        if math.isfinite(best_key) and node_key >= best_key - gap:
            continue

        xs = res.x
        fvals = xs[bin_idx]
        frac = np.abs(fvals - np.round(fvals))
        cand = np.flatnonzero(frac > _INT_TOL)
        if cand.size == 0:
            vals, key = snap(xs)
            if key < best_key - 1e-9:
                best_key = key
                best_vals = vals
            continue

        if best_vals is None and (nodes_done & 15) == 1:
            h_lo = node_lo.copy()
            h_hi = node_hi.copy()
            rounded = np.round(fvals)
            h_lo[bin_idx] = rounded
            h_hi[bin_idx] = rounded
            hres = std.solve(h_lo, h_hi, warm=(res.basis, res.vstat), pivot_limit=opts.pivot_limit)
            pivots += hres.pivots
            if hres.status == "optimal":
                vals, key = snap(hres.x)
                if key < best_key - 1e-9:
                    best_key = key
                    best_vals = vals

        # most fractional first; np.argmin takes the first minimum, and
        # cand is ascending, so ties resolve to the lowest variable id
        pick = cand[int(np.argmin(np.abs(frac[cand] - 0.5)))]
        jvar = int(bin_idx[pick])
        warm_child = (res.basis, res.vstat)
        first = 1.0 if xs[jvar] >= 0.5 else 0.0
        for val in (first, 1.0 - first):
            seq += 1
            heapq.heappush(heap, (node_key, seq, (chain, jvar, val), warm_child))

    if saw_unbounded:
        sol = finish("unbounded", math.inf, None, math.inf, nodes_done, pivots)
        sol.objective = -math.inf if not maximize else math.inf
        return sol
    if heap:
        open_bound = min(open_bound, min(h[0] for h in heap))
    if hit_pivot_limit:
        return finish("pivot_limit", best_key, best_vals, open_bound, nodes_done, pivots)
    if hit_node_limit:
        return finish("node_limit", best_key, best_vals, open_bound, nodes_done, pivots)
    if best_vals is None:
        return finish("infeasible", math.inf, None, math.inf, nodes_done, pivots)
    return finish("optimal", best_key, best_vals, best_key, nodes_done, pivots)
