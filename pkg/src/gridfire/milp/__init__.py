"""Self-contained mixed-integer linear programming toolkit.

The public surface is the :class:`MilpProblem` builder, the bundled
branch-and-bound solver, and two exact linearization helpers for products
involving binary variables. An optional scipy/HiGHS backend with the same
interface lives in :mod:`gridfire.milp.scipy_backend` and is used for
differential testing.
"""

import os

from .problem import (
    BINARY,
    MilpError,
    MilpProblem,
    MilpSolution,
    SolveOptions,
    VarRef,
    linearize_product_bb,
    linearize_product_bc,
)
from .branch_bound import BranchBoundBackend, solve_branch_and_bound
from .simplex import HAS_NUMBA, USING_NUMBA, LpResult, StandardLp

# beyond these sizes the bundled branch-and-bound (dense basis inverse)
# stops being the right tool and the HiGHS backend takes over
_BUILTIN_MAX_FREE_BINARIES = 64
_BUILTIN_MAX_ROWS = 1500


def free_binary_count(problem: MilpProblem) -> int:
    lo, hi = problem.var_bounds()
    return sum(1 for k, l, h in zip(problem.var_kinds(), lo, hi)
               if k == BINARY and l < h)


def solve_milp(problem: MilpProblem, options: SolveOptions | None = None) -> MilpSolution:
    """Solve with an automatically chosen backend.

    The bundled branch-and-bound handles desk-scale models; models with many
    free binaries or rows go to the scipy/HiGHS backend when it is
    importable. GRIDFIRE_BACKEND=builtin or =scipy forces the choice.
    """
    forced = os.environ.get("GRIDFIRE_BACKEND", "").strip().lower()
    if forced not in ("", "builtin", "scipy"):
        raise MilpError(f"GRIDFIRE_BACKEND must be 'builtin' or 'scipy', got {forced!r}")
    use_scipy = forced == "scipy"
    if not forced and (free_binary_count(problem) > _BUILTIN_MAX_FREE_BINARIES
                       or problem.n_rows > _BUILTIN_MAX_ROWS):
        use_scipy = True
    if use_scipy:
        try:
            from .scipy_backend import ScipyBackend
        except ImportError:
            if forced == "scipy":
                raise
            use_scipy = False
        else:
            return ScipyBackend().solve(problem, options)
    return solve_branch_and_bound(problem, options)


__all__ = [
    "MilpError",
    "MilpProblem",
    "MilpSolution",
    "SolveOptions",
    "VarRef",
    "linearize_product_bb",
    "linearize_product_bc",
    "BranchBoundBackend",
    "solve_branch_and_bound",
    "solve_milp",
    "free_binary_count",
    "StandardLp",
    "LpResult",
    "HAS_NUMBA",
    "USING_NUMBA",
]
