"""Bounded-variable primal simplex on a dense equality standard form.

This is the compute core of the bundled MILP solver: every relaxation the
branch-and-bound explores lands here. The algorithm is a textbook revised
simplex with explicit basis inverse, adapted for general variable bounds:

* all rows are equalities after slack insertion; slacks carry the row sense
  in their bounds ([0, inf) for <=, (-inf, 0] for >=, [0, 0] for =);
* nonbasic variables rest at a finite bound (or at zero when free);
* phase 1 is the composite method: it minimizes the total bound violation of
  the basic variables directly, without artificial columns;
* pricing is Dantzig with a Bland fallback that engages on stalls, which
  gives finite termination in the degenerate cases that matter here;
* the basis inverse is maintained by rank-1 updates and refactorized from
  scratch (LAPACK inverse) every few hundred pivots or on numerical doubt.

The pivot loop `_pivot_loop` is written in vectorized numpy that numba can
compile without changes. With numba present it is jitted (the fast path for
the many small LPs the oracle and the branch-and-bound generate); setting
GRIDFIRE_PURE_NUMPY=1 in the environment, or running without numba installed,
selects the identical uncompiled function.

Problem data is equilibrated with power-of-two row/column scales before
solving, so the fixed tolerances below act on roughly unit-magnitude numbers
and scaling is exactly invertible in floating point. Binary columns are never
scaled; branch bounds stay 0/1 in scaled space.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .problem import MilpError


def _env_disabled() -> bool:
    return os.environ.get("GRIDFIRE_PURE_NUMPY", "").strip().lower() not in ("", "0", "false")


HAS_NUMBA = False
if not _env_disabled():
    try:
        from numba import njit as _njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA

# kernel exit codes
_OPTIMAL = 0
_INFEASIBLE = 1
_UNBOUNDED = 2
_CONTINUE = 3
_NUMERIC = 5

_FTOL = 1e-8  # bound feasibility on scaled data
_DTOL = 1e-9  # reduced-cost threshold
_PTOL = 1e-11  # smallest acceptable pivot magnitude


def _pivot_loop(AT, b, c, lo, hi, basis, vstat, x, binv, budget, bland_in, stall_lim):
    """Run up to `budget` pivots in place; return (code, pivots, bland).

    vstat codes: 0 nonbasic at lower, 1 nonbasic at upper, 2 basic,
    3 nonbasic free (at zero).
    """
    n, m = AT.shape
    # rebuild the working point from nonbasic statuses
    for j in range(n):
        s = vstat[j]
        if s == 0:
            x[j] = lo[j]
        elif s == 1:
            x[j] = hi[j]
        elif s == 3:
            x[j] = 0.0
    for i in range(m):
        x[basis[i]] = 0.0
    xb = binv @ (b - x @ AT)

    lob = np.empty(m)
    hib = np.empty(m)
    cb = np.empty(m)
    for i in range(m):
        lob[i] = lo[basis[i]]
        hib[i] = hi[basis[i]]
        cb[i] = c[basis[i]]

    openj = (hi - lo) > 0.0
    at_lo = np.empty(n, dtype=np.bool_)
    at_hi = np.empty(n, dtype=np.bool_)
    for j in range(n):
        at_lo[j] = vstat[j] == 0 or vstat[j] == 3
        at_hi[j] = vstat[j] == 1 or vstat[j] == 3

    bland = bland_in
    pivots = 0
    stall = 0
    best_metric = np.inf
    was_phase1 = True

    while pivots < budget:
        bad_lo = xb < lob - _FTOL
        bad_hi = xb > hib + _FTOL
        infeas = 0.0
        for i in range(m):
            if bad_lo[i]:
                infeas += lob[i] - xb[i]
            elif bad_hi[i]:
                infeas += xb[i] - hib[i]
        phase1 = infeas > 0.0

        if phase1:
            d = np.where(bad_lo, -1.0, 0.0) + np.where(bad_hi, 1.0, 0.0)
            y = d @ binv
            metric = infeas
        else:
            y = cb @ binv
            metric = float(cb @ xb)

        if phase1 != was_phase1:
            best_metric = np.inf
            stall = 0
            was_phase1 = phase1
        if metric < best_metric - 1e-10 * (1.0 + abs(metric)):
            best_metric = metric
            stall = 0
        else:
            stall += 1
            if stall > stall_lim:
                if bland:
                    return _NUMERIC, pivots, bland
                bland = True
                stall = 0

        z = AT @ y
        if phase1:
            up = np.where(at_lo & openj & (z > _DTOL), z, -np.inf)
            dn = np.where(at_hi & openj & (z < -_DTOL), -z, -np.inf)
        else:
            rc = c - z
            up = np.where(at_lo & openj & (rc < -_DTOL), -rc, -np.inf)
            dn = np.where(at_hi & openj & (rc > _DTOL), rc, -np.inf)
        score = np.maximum(up, dn)

        if bland:
            enter = -1
            for j in range(n):
                if score[j] > -np.inf:
                    enter = j
                    break
        else:
            enter = int(np.argmax(score))
            if score[enter] == -np.inf:
                enter = -1
        if enter < 0:
            for i in range(m):
                x[basis[i]] = xb[i]
            if phase1:
                return _INFEASIBLE, pivots, bland
            return _OPTIMAL, pivots, bland
        sigma = 1.0 if up[enter] >= dn[enter] else -1.0

        aj = AT[enter]
        alpha = binv @ aj
        di = -sigma * alpha

        ti = np.full(m, np.inf)
        if m > 0:
            rising = di > _PTOL
            falling = di < -_PTOL
            good = ~(bad_lo | bad_hi)
            dup = np.where(rising, di, 1.0)
            ddn = np.where(falling, -di, 1.0)
            mask = rising & bad_lo
            ti = np.where(mask, (lob - xb) / dup, ti)
            mask = rising & good & np.isfinite(hib)
            ti = np.where(mask, np.where(mask, hib - xb, 0.0) / dup, ti)
            mask = falling & bad_hi
            ti = np.where(mask, (xb - hib) / ddn, ti)
            mask = falling & good & np.isfinite(lob)
            ti = np.where(mask, np.where(mask, xb - lob, 0.0) / ddn, ti)
            ti = np.maximum(ti, 0.0)
            tbasic = ti.min()
        else:
            tbasic = np.inf

        tflip = hi[enter] - lo[enter]  # inf when either bound is infinite

        if not np.isfinite(tbasic):
            if np.isfinite(tflip):
                t = tflip
                xb -= (sigma * t) * alpha
                if vstat[enter] == 0:
                    vstat[enter] = 1
                    x[enter] = hi[enter]
                    at_lo[enter] = False
                    at_hi[enter] = True
                else:
                    vstat[enter] = 0
                    x[enter] = lo[enter]
                    at_lo[enter] = True
                    at_hi[enter] = False
                pivots += 1
                continue
            for i in range(m):
                x[basis[i]] = xb[i]
            if phase1:
                return _NUMERIC, pivots, bland
            return _UNBOUNDED, pivots, bland

        if np.isfinite(tflip) and tflip <= tbasic:
            t = tflip
            xb -= (sigma * t) * alpha
            if vstat[enter] == 0:
                vstat[enter] = 1
                x[enter] = hi[enter]
                at_lo[enter] = False
                at_hi[enter] = True
            else:
                vstat[enter] = 0
                x[enter] = lo[enter]
                at_lo[enter] = True
                at_hi[enter] = False
            pivots += 1
            continue

        # leaving-row choice among near-ties: largest pivot magnitude wins,
        # Bland mode takes the smallest variable id for finite termination
        thr = tbasic * (1.0 + 1e-9) + 1e-12
        rrow = -1
        if bland:
            bestid = np.int64(1) << 62
            for i in range(m):
                if ti[i] <= thr and abs(alpha[i]) > _PTOL and basis[i] < bestid:
                    bestid = basis[i]
                    rrow = i
        else:
            bestmag = 0.0
            for i in range(m):
                if ti[i] <= thr and abs(alpha[i]) > bestmag:
                    bestmag = abs(alpha[i])
                    rrow = i
        if rrow < 0:
            for i in range(m):
                x[basis[i]] = xb[i]
            return _NUMERIC, pivots, bland

        t = ti[rrow]
        piv = alpha[rrow]
        leave = basis[rrow]

        # move the point
        if vstat[enter] == 0:
            xj = lo[enter] + sigma * t
        elif vstat[enter] == 1:
            xj = hi[enter] + sigma * t
        else:
            xj = sigma * t
        xb -= (sigma * t) * alpha

        # leaving variable lands exactly on its blocking bound
        if di[rrow] > 0.0:
            if bad_lo[rrow]:
                x[leave] = lob[rrow]
                vstat[leave] = 0
                at_lo[leave] = True
                at_hi[leave] = False
            else:
                x[leave] = hib[rrow]
                vstat[leave] = 1
                at_lo[leave] = False
                at_hi[leave] = True
        else:
            if bad_hi[rrow]:
                x[leave] = hib[rrow]
                vstat[leave] = 1
                at_lo[leave] = False
                at_hi[leave] = True
            else:
                x[leave] = lob[rrow]
                vstat[leave] = 0
                at_lo[leave] = True
                at_hi[leave] = False

        basis[rrow] = enter
        vstat[enter] = 2
        at_lo[enter] = False
        at_hi[enter] = False
        xb[rrow] = xj
        lob[rrow] = lo[enter]
        hib[rrow] = hi[enter]
        cb[rrow] = c[enter]

        # rank-1 basis-inverse update, row at a time
        binv[rrow, :] = binv[rrow, :] / piv
        rowr = binv[rrow]
        for i in range(m):
            if i == rrow:
                continue
            f = alpha[i]
            if f != 0.0:
                binv[i, :] -= f * rowr
        pivots += 1

    for i in range(m):
        x[basis[i]] = xb[i]
    return _CONTINUE, pivots, bland


if HAS_NUMBA:
    _pivot_loop = _njit(cache=True, fastmath=False)(_pivot_loop)


def _pow2_scale(v: np.ndarray) -> np.ndarray:
    """Nearest power of two to 1/v, 1.0 where v is zero or non-finite."""
    out = np.ones_like(v)
    ok = np.isfinite(v) & (v > 0.0)
    out[ok] = np.exp2(-np.round(np.log2(v[ok])))
    return out


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float  # min-form objective, original scale, without constants
    x: np.ndarray  # structural variable values, original scale
    basis: np.ndarray
    vstat: np.ndarray
    pivots: int


class StandardLp:
    """Reusable scaled standard form of one constraint matrix.

    Built once per MILP/LP; every solve supplies (possibly modified) scaled
    bounds and an optional warm basis. Bound edits for binary columns can use
    raw 0/1 values because binary columns are exempt from column scaling.
    """

    def __init__(
        self,
        a: np.ndarray,
        senses: np.ndarray,
        rhs: np.ndarray,
        c: np.ndarray,
        lo: np.ndarray,
        hi: np.ndarray,
        is_binary: np.ndarray | None = None,
        maximize: bool = False,
    ):
        m, n = a.shape
        self.m = m
        self.n_struct = n
        self.n_total = n + m
        self.maximize = maximize
        sign = -1.0 if maximize else 1.0

        full = np.hstack([a, np.eye(m)]) if m else np.zeros((0, n))
        s_lo = np.zeros(m)
        s_hi = np.zeros(m)
        s_lo[senses == 0] = 0.0
        s_hi[senses == 0] = np.inf
        s_lo[senses == 1] = -np.inf
        s_hi[senses == 1] = 0.0
        # equality slacks keep [0, 0]

        lo_full = np.concatenate([lo, s_lo])
        hi_full = np.concatenate([hi, s_hi])
        c_full = np.concatenate([sign * c, np.zeros(m)])
        b = rhs.astype(np.float64).copy()

        nobin = np.ones(self.n_total, dtype=bool)
        if is_binary is not None:
            nobin[: self.n_struct] = ~is_binary

        rs = np.ones(m)
        cs = np.ones(self.n_total)
        work = full.copy()
        for _ in range(2):
            if m:
                rmax = np.max(np.abs(work), axis=1)
                r = _pow2_scale(rmax)
                work *= r[:, None]
                rs *= r
            cmax = np.max(np.abs(work), axis=0) if m else np.zeros(self.n_total)
            cscale = _pow2_scale(cmax)
            cscale[~nobin] = 1.0
            work *= cscale[None, :]
            cs *= cscale

        self.row_scale = rs
        self.col_scale = cs
        self.b = b * rs
        # columns as contiguous rows for pricing and column fetches
        self.AT = np.ascontiguousarray(work.T)

        c_scaled = c_full * cs
        cmag = float(np.max(np.abs(c_scaled))) if self.n_total else 0.0
        self.obj_scale = float(np.exp2(np.round(np.log2(cmag)))) if cmag > 0 else 1.0
        self.c = c_scaled / self.obj_scale
        self.lo0 = lo_full / cs
        self.hi0 = hi_full / cs
        self._slack_base = n

    def default_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lo0.copy(), self.hi0.copy()

    def scaled_bound(self, j: int, value: float) -> float:
        return value / self.col_scale[j]

    def solve(
        self,
        lo: np.ndarray | None = None,
        hi: np.ndarray | None = None,
        warm: tuple[np.ndarray, np.ndarray] | None = None,
        pivot_limit: int = 2_000_000,
    ) -> LpResult:
        m, nt = self.m, self.n_total
        lo = self.lo0 if lo is None else lo
        hi = self.hi0 if hi is None else hi

        if m == 0:
            x = np.where(self.c > 0, lo, np.where(self.c < 0, hi, np.where(np.isfinite(lo), lo, 0.0)))
            if not np.all(np.isfinite(x)):
                return LpResult("unbounded", -math.inf, np.empty(0), np.empty(0, np.int64), np.empty(0, np.int8), 0)
            obj = float(self.c @ x) * self.obj_scale
            xs = x[: self.n_struct] * self.col_scale[: self.n_struct]
            vst = np.where(np.isfinite(lo), 0, np.where(np.isfinite(hi), 1, 3)).astype(np.int8)
            return LpResult("optimal", obj, xs, np.empty(0, np.int64), vst, 0)

        x = np.zeros(nt)
        if warm is not None:
            basis = warm[0].astype(np.int64).copy()
            vstat = warm[1].astype(np.int8).copy()
            ok = (
                basis.shape[0] == m
                and np.all(basis >= 0)
                and np.all(basis < nt)
                and len(np.unique(basis)) == m
            )
            if ok:
                vstat[vstat == 2] = 0
                vstat[basis] = 2
                for j in range(nt):
                    if vstat[j] == 2:
                        continue
                    if vstat[j] == 0 and not np.isfinite(lo[j]):
                        vstat[j] = 1 if np.isfinite(hi[j]) else 3
                    elif vstat[j] == 1 and not np.isfinite(hi[j]):
                        vstat[j] = 0 if np.isfinite(lo[j]) else 3
                    elif vstat[j] == 3 and (np.isfinite(lo[j]) or np.isfinite(hi[j])):
                        vstat[j] = 0 if np.isfinite(lo[j]) else 1
                binv = self._factorize(basis)
                if binv is None:
                    warm = None
                else:
                    return self._drive(lo, hi, basis, vstat, x, binv, pivot_limit)
            else:
                warm = None

        basis = np.arange(self._slack_base, self._slack_base + m, dtype=np.int64)
        vstat = np.empty(nt, dtype=np.int8)
        for j in range(nt):
            if np.isfinite(lo[j]):
                vstat[j] = 0
            elif np.isfinite(hi[j]):
                vstat[j] = 1
            else:
                vstat[j] = 3
        vstat[basis] = 2
        binv = np.eye(m)
        return self._drive(lo, hi, basis, vstat, x, binv, pivot_limit)

    def _factorize(self, basis: np.ndarray) -> np.ndarray | None:
        bmat = self.AT[basis].T.copy()
        try:
            binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(binv)):
            return None
        return binv

    def _drive(self, lo, hi, basis, vstat, x, binv, pivot_limit) -> LpResult:
        total = 0
        bland = False
        resets = 0
        budget = 256
        stall_lim = 200 + 2 * (self.m + self.n_total)
        while True:
            code, piv, bland = _pivot_loop(
                self.AT, self.b, self.c, lo, hi, basis, vstat, x, binv,
                budget, bland, stall_lim,
            )
            total += piv
            if code == _CONTINUE:
                if total >= pivot_limit:
                    raise MilpError(f"simplex pivot limit exceeded ({total} pivots)")
                nb = self._factorize(basis)
                if nb is None:
                    code = _NUMERIC
                else:
                    binv = nb
                    continue
            if code == _NUMERIC:
                resets += 1
                if resets > 3:
                    raise MilpError("simplex: persistent numerical failure")
                # hard reset: cold Bland run from the slack basis
                basis = np.arange(self._slack_base, self._slack_base + self.m, dtype=np.int64)
                vstat = np.empty(self.n_total, dtype=np.int8)
                for j in range(self.n_total):
                    if np.isfinite(lo[j]):
                        vstat[j] = 0
                    elif np.isfinite(hi[j]):
                        vstat[j] = 1
                    else:
                        vstat[j] = 3
                vstat[basis] = 2
                binv = np.eye(self.m)
                bland = True
                continue
            if code == _OPTIMAL:
                # audit the row residuals before trusting the basis inverse
                resid = float(np.max(np.abs(self.b - x @ self.AT))) if self.m else 0.0
                if resid > 1e-6 * (1.0 + float(np.max(np.abs(self.b)))):
                    resets += 1
                    if resets > 3:
                        raise MilpError("simplex: residual check failed repeatedly")
                    nb = self._factorize(basis)
                    if nb is None:
                        bland = True
                        binv = np.eye(self.m)
                        basis = np.arange(self._slack_base, self._slack_base + self.m, dtype=np.int64)
                        for j in range(self.n_total):
                            if vstat[j] == 2:
                                vstat[j] = 0 if np.isfinite(lo[j]) else (1 if np.isfinite(hi[j]) else 3)
                        vstat[basis] = 2
                    else:
                        binv = nb
                    continue
                obj = float(self.c @ x) * self.obj_scale
                xs = x[: self.n_struct] * self.col_scale[: self.n_struct]
                return LpResult("optimal", obj, xs, basis, vstat, total)
            if code == _INFEASIBLE:
                return LpResult("infeasible", math.inf, x[: self.n_struct] * self.col_scale[: self.n_struct], basis, vstat, total)
            if code == _UNBOUNDED:
                return LpResult("unbounded", -math.inf, x[: self.n_struct] * self.col_scale[: self.n_struct], basis, vstat, total)
            raise MilpError(f"simplex: unexpected kernel code {code}")
