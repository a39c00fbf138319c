"""Mixed-integer linear program container and binary-product gadgets.

The container is deliberately plain: variables are rows in parallel arrays,
constraints are sparse (index, coefficient) lists, and the objective is a
dense coefficient vector plus a constant. Solver backends consume the dense
export from :meth:`MilpProblem.to_arrays`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"

_SENSES = ("<=", ">=", "=")


class MilpError(ValueError):
    """Raised for malformed problems or gadget preconditions."""


@dataclass(frozen=True)
class VarRef:
    """Opaque handle to a problem variable."""

    id: int
    kind: str
    lo: float
    hi: float
    name: str = ""


@dataclass
class SolveOptions:
    """Backend-independent solve controls.

    abs_gap/rel_gap: branch-and-bound fathoming tolerances on the objective.
    seed is recorded for reproducibility contracts; the bundled solver is
    deterministic regardless of it.
    """

    abs_gap: float = 1e-6
    rel_gap: float = 0.0
    node_limit: int = 2_000_000
    pivot_limit: int = 50_000_000
    time_limit: float | None = None
    seed: int = 0
    dump_lp: str | None = None


@dataclass
class MilpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded" | "node_limit" | "pivot_limit"
    objective: float
    values: np.ndarray
    best_bound: float
    nodes: int = 0
    pivots: int = 0

    def value(self, ref: VarRef) -> float:
        return float(self.values[ref.id])

    def __getitem__(self, ref: VarRef) -> float:
        return self.value(ref)


class SolverBackend(Protocol):
    def solve(self, problem: "MilpProblem", options: SolveOptions | None = None) -> MilpSolution: ...


class MilpProblem:
    """A mixed binary/continuous linear program.

    Rows are stored with senses; backends add slacks as needed. The objective
    sense may be "min" or "max"; `objective_constant` is added to reported
    objective values (useful when a model drops an additive constant term).
    """

    def __init__(self, name: str = "milp", sense: str = "min"):
        if sense not in ("min", "max"):
            raise MilpError(f"objective sense must be min or max, got {sense!r}")
        self.name = name
        self.objective_sense = sense
        self.objective_constant = 0.0
        self._lo: list[float] = []
        self._hi: list[float] = []
        self._kind: list[str] = []
        self._obj: list[float] = []
        self._names: list[str] = []
        self._row_idx: list[np.ndarray] = []
        self._row_coef: list[np.ndarray] = []
        self._row_sense: list[str] = []
        self._row_rhs: list[float] = []
        self._row_names: list[str] = []

    # ------------------------------------------------------------------ build

    @property
    def n_vars(self) -> int:
        return len(self._lo)

    @property
    def n_rows(self) -> int:
        return len(self._row_rhs)

    @property
    def n_binaries(self) -> int:
        return sum(1 for k in self._kind if k == BINARY)

    def add_var(
        self,
        name: str = "",
        lo: float = 0.0,
        hi: float = math.inf,
        kind: str = CONTINUOUS,
        obj: float = 0.0,
    ) -> VarRef:
        if kind not in (CONTINUOUS, BINARY):
            raise MilpError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lo = max(0.0, float(lo))
            hi = min(1.0, float(hi))
        if lo > hi:
            raise MilpError(f"variable {name!r}: lower bound {lo} above upper bound {hi}")
        vid = len(self._lo)
        self._lo.append(float(lo))
        self._hi.append(float(hi))
        self._kind.append(kind)
        self._obj.append(float(obj))
        self._names.append(name or f"x{vid}")
        return VarRef(vid, kind, float(lo), float(hi), self._names[-1])

    def set_obj_coeff(self, ref: VarRef | int, coef: float) -> None:
        self._obj[self._vid(ref)] = float(coef)

    def add_obj_term(self, ref: VarRef | int, coef: float) -> None:
        self._obj[self._vid(ref)] += float(coef)

    def add_constraint(
        self,
        coeffs: Iterable[tuple[VarRef | int, float]],
        sense: str,
        rhs: float,
        name: str = "",
    ) -> int:
        if sense not in _SENSES:
            raise MilpError(f"unknown constraint sense {sense!r}")
        if isinstance(coeffs, dict):
            coeffs = coeffs.items()
        acc: dict[int, float] = {}
        for ref, c in coeffs:
            if c == 0.0:
                continue
            vid = self._vid(ref)
            acc[vid] = acc.get(vid, 0.0) + float(c)
        rid = len(self._row_rhs)
        idx = np.fromiter(acc.keys(), dtype=np.int64, count=len(acc))
        order = np.argsort(idx, kind="stable")
        coef = np.fromiter(acc.values(), dtype=np.float64, count=len(acc))
        self._row_idx.append(idx[order])
        self._row_coef.append(coef[order])
        self._row_sense.append(sense)
        self._row_rhs.append(float(rhs))
        self._row_names.append(name or f"c{rid}")
        return rid

    def _vid(self, ref: VarRef | int) -> int:
        vid = ref.id if isinstance(ref, VarRef) else int(ref)
        if not 0 <= vid < len(self._lo):
            raise MilpError(f"variable id {vid} out of range")
        return vid

    # ---------------------------------------------------------------- export

    def to_arrays(self):
        """Dense export: (A, senses, rhs, c, lo, hi, is_binary).

        senses is an int8 vector: 0 for <=, 1 for >=, 2 for =.
        """
        m, n = self.n_rows, self.n_vars
        a = np.zeros((m, n), dtype=np.float64)
        for i in range(m):
            a[i, self._row_idx[i]] = self._row_coef[i]
        senses = np.fromiter(
            (0 if s == "<=" else (1 if s == ">=" else 2) for s in self._row_sense),
            dtype=np.int8,
            count=m,
        )
        rhs = np.asarray(self._row_rhs, dtype=np.float64)
        c = np.asarray(self._obj, dtype=np.float64)
        lo = np.asarray(self._lo, dtype=np.float64)
        hi = np.asarray(self._hi, dtype=np.float64)
        is_bin = np.fromiter((k == BINARY for k in self._kind), dtype=bool, count=n)
        return a, senses, rhs, c, lo, hi, is_bin

    def var_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.asarray(self._lo, dtype=np.float64),
            np.asarray(self._hi, dtype=np.float64),
        )

    def var_names(self) -> list[str]:
        return list(self._names)

    def var_kinds(self) -> list[str]:
        return list(self._kind)

    def fix_var(self, ref: VarRef | int, value: float) -> None:
        """Clamp a variable to a single value (used to freeze binaries)."""
        vid = self._vid(ref)
        if not (self._lo[vid] - 1e-9 <= value <= self._hi[vid] + 1e-9):
            raise MilpError(
                f"cannot fix {self._names[vid]} to {value}: outside [{self._lo[vid]}, {self._hi[vid]}]"
            )
        self._lo[vid] = float(value)
        self._hi[vid] = float(value)

    # ------------------------------------------------------------ evaluation

    def row_activity(self, values: np.ndarray) -> np.ndarray:
        out = np.empty(self.n_rows, dtype=np.float64)
        for i in range(self.n_rows):
            out[i] = float(values[self._row_idx[i]] @ self._row_coef[i])
        return out

    def max_violation(self, values: np.ndarray) -> float:
        """Worst scaled constraint/bound violation of a candidate point."""
        lo, hi = self.var_bounds()
        viol = max(
            float(np.max(lo - values, initial=0.0)),
            float(np.max(values - hi, initial=0.0)),
        )
        act = self.row_activity(values)
        for i, s in enumerate(self._row_sense):
            r = self._row_rhs[i]
            scale = 1.0 + abs(r)
            if s == "<=":
                viol = max(viol, (act[i] - r) / scale)
            elif s == ">=":
                viol = max(viol, (r - act[i]) / scale)
            else:
                viol = max(viol, abs(act[i] - r) / scale)
        return viol

    def objective_value(self, values: np.ndarray) -> float:
        c = np.asarray(self._obj)
        return float(c @ values) + self.objective_constant

    # ---------------------------------------------------------------- LP dump

    def write_lp(self, path: str) -> None:
        """Write the model in LP text format for external cross-checks."""
        lines: list[str] = [f"\\ {self.name}", ""]
        lines.append("Minimize" if self.objective_sense == "min" else "Maximize")
        terms = [
            f"{c:+.17g} {_lp_name(self._names[j])}"
            for j, c in enumerate(self._obj)
            if c != 0.0
        ]
        lines.append(" obj: " + (" ".join(terms) if terms else "0 " + _lp_name(self._names[0]) if self._names else "0"))
        if self.objective_constant:
            lines.append(f"\\ objective constant {self.objective_constant:+.17g}")
        lines.append("Subject To")
        for i in range(self.n_rows):
            body = " ".join(
                f"{c:+.17g} {_lp_name(self._names[j])}"
                for j, c in zip(self._row_idx[i], self._row_coef[i])
            )
            op = {"<=": "<=", ">=": ">=", "=": "="}[self._row_sense[i]]
            lines.append(f" {_lp_name(self._row_names[i])}: {body or '0 ' + _lp_name(self._names[0])} {op} {self._row_rhs[i]:.17g}")
        lines.append("Bounds")
        for j in range(self.n_vars):
            lo, hi = self._lo[j], self._hi[j]
            nm = _lp_name(self._names[j])
            if lo == hi:
                lines.append(f" {nm} = {lo:.17g}")
            else:
                lo_s = "-inf" if math.isinf(lo) else f"{lo:.17g}"
                hi_s = "+inf" if math.isinf(hi) else f"{hi:.17g}"
                lines.append(f" {lo_s} <= {nm} <= {hi_s}")
        bins = [j for j, k in enumerate(self._kind) if k == BINARY]
        if bins:
            lines.append("Binaries")
            lines.append(" " + " ".join(_lp_name(self._names[j]) for j in bins))
        lines.append("End")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _lp_name(name: str) -> str:
    out = []
    for ch in name:
        out.append(ch if (ch.isalnum() or ch in "_.") else "_")
    s = "".join(out)
    if not s or s[0].isdigit():
        s = "v_" + s
    return s


# ------------------------------------------------------------------- gadgets


def linearize_product_bb(p: MilpProblem, x: VarRef, y: VarRef, name: str = "") -> VarRef:
    """Exact product w = x*y of two binary variables.

    w is continuous in [0,1]; the three rows force w = x*y at any integral
    (x, y), so w is binary-valued without being declared binary.
    """
    if x.kind != BINARY or y.kind != BINARY:
        raise MilpError("linearize_product_bb requires two binary variables")
    nm = name or f"and_{x.name}_{y.name}"
    w = p.add_var(nm, lo=0.0, hi=1.0, kind=CONTINUOUS)
    p.add_constraint([(w, 1.0), (x, -1.0)], "<=", 0.0, name=nm + "_le_x")
    p.add_constraint([(w, 1.0), (y, -1.0)], "<=", 0.0, name=nm + "_le_y")
    p.add_constraint([(w, 1.0), (x, -1.0), (y, -1.0)], ">=", -1.0, name=nm + "_ge_sum")
    return w


def linearize_product_bc(p: MilpProblem, v: VarRef, mu: VarRef, name: str = "") -> VarRef:
    """Exact product nu = v*mu of a binary v and a continuous mu in [0, M].

    Uses the complement split nu = mu - omega with
        0 <= nu <= M*v,   0 <= omega <= M*(1 - v),
    where M is mu's (finite) upper bound. At v=1 omega is forced to 0 so
    nu = mu; at v=0 nu is forced to 0.
    """
    if v.kind != BINARY:
        raise MilpError("linearize_product_bc requires a binary first argument")
    if mu.kind != CONTINUOUS:
        raise MilpError("linearize_product_bc requires a continuous second argument")
    if mu.lo < -1e-12:
        raise MilpError(f"{mu.name}: product linearization needs mu >= 0, got lower bound {mu.lo}")
    big_m = mu.hi
    if not math.isfinite(big_m):
        raise MilpError(f"{mu.name}: product linearization needs a finite upper bound")
    nm = name or f"prod_{v.name}_{mu.name}"
    nu = p.add_var(nm, lo=0.0, hi=big_m, kind=CONTINUOUS)
    omega = p.add_var(nm + "_c", lo=0.0, hi=big_m, kind=CONTINUOUS)
    p.add_constraint([(nu, 1.0), (omega, 1.0), (mu, -1.0)], "=", 0.0, name=nm + "_split")
    p.add_constraint([(nu, 1.0), (v, -big_m)], "<=", 0.0, name=nm + "_on")
    p.add_constraint([(omega, 1.0), (v, big_m)], "<=", big_m, name=nm + "_off")
    return nu
