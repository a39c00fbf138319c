"""First-stage planning problem over a set of uncertainty realizations.

The master decides, per year: which candidate lines exist, which lines are
modified (hardened), how much solar capacity each candidate bus carries,
and, per scenario-year, which lines are energized. For every collected
uncertainty realization it embeds a full recourse copy (dispatch, flows,
angles, served demand, ignition scores) so the investment choice already
prices each known worst case. The objective charges investment increments
plus an epigraph variable that dominates every realization's operating
cost, so the optimal value lower-bounds the robust optimum.

Box constraints (segment caps, generator limits, served-demand caps) are
expressed as variable bounds; everything coupling two or more variables is
a row. Flow convention: flow is measured from->to and equals
(angle_from - angle_to) / reactance on an energized existing line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .milp import (
    BINARY,
    MilpError,
    MilpProblem,
    MilpSolution,
    SolveOptions,
    linearize_product_bb,
    solve_milp,
)
from .model import (
    CaseData,
    CaseError,
    DispatchSolution,
    PlanDecision,
    RealizedTables,
    UncertaintyRealization,
    apply_realization,
    validate_case,
)

__all__ = ["MasterContext", "build_master", "solve_master", "default_big_m"]


def default_big_m(case: CaseData) -> float:
    """Disjunction constant for the DC-flow rows.

    Ten times the largest rating plus the largest susceptance times pi,
    comfortably above any angle-difference term a connected dispatch can
    produce while small enough to keep the LP numerically tame.
    """
    if case.config.big_m is not None:
        return float(case.config.big_m)
    max_rating = max((ln.rating for ln in case.lines), default=0.0)
    max_b = max((1.0 / ln.reactance for ln in case.lines), default=0.0)
    return 10.0 * (max_rating + max_b * math.pi)


@dataclass
class MasterContext:
    """Case plus the realization list and, after build, the variable maps.

    Realization 0 is always the nominal (all-flags-zero) point. Variable
    maps are object arrays of VarRef: first-stage maps are shared, recourse
    maps carry a trailing realization axis.
    """

    case: CaseData
    realizations: list[UncertaintyRealization] = field(default_factory=list)
    problem: MilpProblem | None = None
    vars: dict[str, Any] = field(default_factory=dict)
    realized: list[RealizedTables] = field(default_factory=list)

    def __post_init__(self):
        if not self.realizations:
            self.realizations = [UncertaintyRealization.zeros(self.case)]

    def add_realization(self, r: UncertaintyRealization) -> None:
        self.realizations.append(r)
        self.problem = None  # structure changed; force a rebuild

    def known_keys(self) -> set[bytes]:
        return {r.key() for r in self.realizations}


def build_master(ctx: MasterContext) -> MilpProblem:
    """Assemble the investment MILP over ctx.realizations."""
    case = ctx.case
    if not ctx.realizations:
        raise MilpError("master needs at least one uncertainty realization")
    r0 = ctx.realizations[0]
    if r0.flag_count() or r0.v_demand.any() or r0.v_solar.any():
        raise MilpError("realization 0 must be the nominal all-zeros point")
    problems = validate_case(case)
    if problems:
        raise CaseError("case failed validation:\n  " + "\n  ".join(problems))
    for k, r in enumerate(ctx.realizations):
        bad = r.violations()
        if bad:
            raise CaseError(f"realization {k}: " + "; ".join(bad))

    L, B, G = case.n_lines, case.n_buses, case.n_gens
    S, Y, R = case.n_scenarios, case.n_years, len(ctx.realizations)
    cfg = case.config
    big_m = default_big_m(case)
    hours = case.hours
    psi = case.ignition + case.ignition_deviation
    candidates = np.flatnonzero(case.solar_candidates)
    ratings = np.array([ln.rating for ln in case.lines])
    susceptance = np.array([1.0 / ln.reactance for ln in case.lines])

    p = MilpProblem(name=f"master_{case.name}_{R}r", sense="min")
    v: dict[str, Any] = {}
    ctx.vars = v
    ctx.realized = [apply_realization(case, r) for r in ctx.realizations]

    # --- first-stage variables
    exs = np.empty((L, Y), dtype=object)
    mod = np.empty((L, Y), dtype=object)
    en = np.empty((L, S, Y), dtype=object)
    for l, ln in enumerate(case.lines):
        for y in range(Y):
            exs[l, y] = p.add_var(f"exs[{ln.id},{y + 1}]", kind=BINARY)
            if ln.existing:
                p.fix_var(exs[l, y], 1.0)  # flag rule: existence at least rho
            mod[l, y] = p.add_var(f"mod[{ln.id},{y + 1}]", kind=BINARY)
            for s in range(S):
                en[l, s, y] = p.add_var(f"en[{ln.id},{s},{y + 1}]", kind=BINARY)
    aux = np.empty((L, S, Y), dtype=object)
    for l, ln in enumerate(case.lines):
        for y in range(Y):
            for s in range(S):
                aux[l, s, y] = linearize_product_bb(
                    p, mod[l, y], en[l, s, y], name=f"aux[{ln.id},{s},{y + 1}]")
    pbar = np.empty((B, Y), dtype=object)
    for i in candidates:
        for y in range(Y):
            pbar[i, y] = p.add_var(f"pbar[{case.buses[i].id},{y + 1}]", lo=0.0)

    # --- first-stage structure: monotone builds, energize only what exists
    for l in range(L):
        for y in range(Y):
            if y > 0:
                p.add_constraint([(exs[l, y], 1.0), (exs[l, y - 1], -1.0)], ">=", 0.0)
                p.add_constraint([(mod[l, y], 1.0), (mod[l, y - 1], -1.0)], ">=", 0.0)
            for s in range(S):
                p.add_constraint([(en[l, s, y], 1.0), (exs[l, y], -1.0)], "<=", 0.0)
    for i in candidates:
        for y in range(1, Y):
            p.add_constraint([(pbar[i, y], 1.0), (pbar[i, y - 1], -1.0)], ">=", 0.0)

    # --- investment objective: pay for increments over the previous year
    for l in range(L):
        for y in range(Y):
            p.add_obj_term(exs[l, y], case.line_install_cost[l, y])
            p.add_obj_term(mod[l, y], case.line_modify_cost[l, y])
            if y + 1 < Y:
                p.add_obj_term(exs[l, y], -case.line_install_cost[l, y + 1])
                p.add_obj_term(mod[l, y], -case.line_modify_cost[l, y + 1])
    for i in candidates:
        for y in range(Y):
            p.add_obj_term(pbar[i, y], case.solar_cost[y])
            if y + 1 < Y:
                p.add_obj_term(pbar[i, y], -case.solar_cost[y + 1])
    epigraph = p.add_var("worst_known_operation", lo=0.0, obj=1.0)
    v.update(exs=exs, mod=mod, en=en, aux=aux, pbar=pbar, epigraph=epigraph)

    # --- one recourse copy per realization
    gen = np.empty((G, S, Y, R), dtype=object)
    seg = [np.empty((len(case.segments[g]), S, Y, R), dtype=object) for g in range(G)]
    sol = np.empty((B, S, Y, R), dtype=object)
    served = np.empty((B, S, Y, R), dtype=object)
    flow = np.empty((L, S, Y, R), dtype=object)
    theta = np.empty((B, S, Y, R), dtype=object)
    score = np.empty((L, S, Y, R), dtype=object)
    v.update(gen=gen, seg=seg, sol=sol, served=served, flow=flow, theta=theta,
             score=score)
    ref_bus = case.reference_bus

    for r in range(R):
        demand = ctx.realized[r].demand
        kappa = ctx.realized[r].solar_availability
        epi_terms: list[tuple[Any, float]] = [(epigraph, 1.0)]
        epi_rhs = 0.0
        for s in range(S):
            for y in range(Y):
                tag = f"{s},{y + 1},{r}"
                for g, gobj in enumerate(case.generators):
                    gen[g, s, y, r] = p.add_var(f"pg[{gobj.id},{tag}]",
                                                lo=gobj.p_min, hi=gobj.p_max)
                    for z, sg in enumerate(case.segments[g]):
                        ref = p.add_var(f"pgz[{gobj.id},{z},{tag}]", lo=0.0,
                                        hi=sg.capacity)
                        seg[g][z, s, y, r] = ref
                        epi_terms.append((ref, -hours[s] * sg.slope))
                    # segment powers compose the unit's output
                    p.add_constraint(
                        [(seg[g][z, s, y, r], 1.0) for z in range(len(case.segments[g]))]
                        + [(gen[g, s, y, r], -1.0)], "=", 0.0)
                for i in candidates:
                    sol[i, s, y, r] = p.add_var(f"psol[{case.buses[i].id},{tag}]", lo=0.0)
                    # dispatch limited by installed capacity times availability
                    p.add_constraint([(sol[i, s, y, r], 1.0),
                                      (pbar[i, y], -kappa[i, s, y])], "<=", 0.0)
                for i in range(B):
                    served[i, s, y, r] = p.add_var(f"pd[{case.buses[i].id},{tag}]",
                                                   lo=0.0, hi=max(demand[i, s, y], 0.0))
                    epi_terms.append((served[i, s, y, r], hours[s] * cfg.shed_penalty))
                    epi_rhs += hours[s] * cfg.shed_penalty * demand[i, s, y]
                for l in range(L):
                    flow[l, s, y, r] = p.add_var(f"pl[{case.lines[l].id},{tag}]",
                                                 lo=-math.inf)
                for i in range(B):
                    lo = hi = 0.0 if i == ref_bus else None
                    theta[i, s, y, r] = p.add_var(
                        f"th[{case.buses[i].id},{tag}]",
                        lo=-math.inf if lo is None else lo,
                        hi=math.inf if hi is None else hi)
                for l in range(L):
                    score[l, s, y, r] = p.add_var(f"sc[{case.lines[l].id},{tag}]", lo=0.0)

                # nodal balance: served + outgoing = incoming + generation + solar
                for i in range(B):
                    terms = [(served[i, s, y, r], 1.0)]
                    for l in range(L):
                        if case.line_from[l] == i:
                            terms.append((flow[l, s, y, r], 1.0))
                        elif case.line_to[l] == i:
                            terms.append((flow[l, s, y, r], -1.0))
                    for g in range(G):
                        if case.gen_bus[g] == i:
                            terms.append((gen[g, s, y, r], -1.0))
                    if i in candidates:
                        terms.append((sol[i, s, y, r], -1.0))
                    p.add_constraint(terms, "=", 0.0, name=f"bal[{case.buses[i].id},{tag}]")

                for l in range(L):
                    fb, tb = case.line_from[l], case.line_to[l]
                    b_l = susceptance[l]
                    # DC flow binds only when the line exists and is closed
                    dc = [(theta[fb, s, y, r], b_l), (theta[tb, s, y, r], -b_l),
                          (flow[l, s, y, r], -1.0)]
                    y_ex = exs[l, y]
                    p.add_constraint(dc + [(en[l, s, y], big_m), (y_ex, big_m)],
                                     "<=", 2.0 * big_m)
                    p.add_constraint(dc + [(en[l, s, y], -big_m), (y_ex, -big_m)],
                                     ">=", -2.0 * big_m)
                    # thermal limits vanish when de-energized
                    p.add_constraint([(flow[l, s, y, r], 1.0),
                                      (en[l, s, y], -ratings[l])], "<=", 0.0)
                    p.add_constraint([(flow[l, s, y, r], -1.0),
                                      (en[l, s, y], -ratings[l])], "<=", 0.0)
                    # ignition score floor; hardening halves the energized score
                    p.add_constraint([(score[l, s, y, r], 1.0),
                                      (en[l, s, y], -psi[l, s, y]),
                                      (aux[l, s, y], cfg.delta * psi[l, s, y])],
                                     ">=", 0.0)
                # risk budget per scenario-year
                p.add_constraint([(score[l, s, y, r], 1.0) for l in range(L)],
                                 "<=", cfg.risk_tolerance, name=f"risk[{tag}]")

        # epigraph: e dominates this realization's operating cost
        p.add_constraint(epi_terms, ">=", epi_rhs, name=f"epi[{r}]")

    ctx.problem = p
    return p


def _extract_plan(ctx: MasterContext, sol: MilpSolution) -> PlanDecision:
    case = ctx.case
    L, B, S, Y = case.n_lines, case.n_buses, case.n_scenarios, case.n_years
    v = ctx.vars

    def grab_binary(arr):
        out = np.zeros(arr.shape, dtype=np.int8)
        it = np.nditer(out, flags=["multi_index"])
        for _ in it:
            ref = arr[it.multi_index]
            out[it.multi_index] = int(round(sol.value(ref)))
        return out

    exs = grab_binary(v["exs"])
    mod = grab_binary(v["mod"])
    en = grab_binary(v["en"])
    cap = np.zeros((B, Y))
    for i in np.flatnonzero(case.solar_candidates):
        for y in range(Y):
            cap[i, y] = max(0.0, sol.value(v["pbar"][i, y]))
    # monotone invariants can drift by the solver tolerance; snap them
    np.maximum.accumulate(cap, axis=1, out=cap)
    return PlanDecision(line_exists=exs, line_modified=mod, line_energized=en,
                        solar_capacity=cap, aux=en * mod[:, None, :])


def _extract_dispatches(ctx: MasterContext, sol: MilpSolution,
                        plan: PlanDecision) -> list[DispatchSolution]:
    case = ctx.case
    L, B, G = case.n_lines, case.n_buses, case.n_gens
    S, Y = case.n_scenarios, case.n_years
    v = ctx.vars
    psi = case.ignition + case.ignition_deviation
    out = []
    for r in range(len(ctx.realizations)):
        gen = np.zeros((G, S, Y))
        segs = []
        for g in range(G):
            z_n = len(case.segments[g])
            sg = np.zeros((z_n, S, Y))
            for z in range(z_n):
                for s in range(S):
                    for y in range(Y):
                        sg[z, s, y] = sol.value(v["seg"][g][z, s, y, r])
            segs.append(sg)
            for s in range(S):
                for y in range(Y):
                    gen[g, s, y] = sol.value(v["gen"][g, s, y, r])
        solar = np.zeros((B, S, Y))
        served = np.zeros((B, S, Y))
        theta = np.zeros((B, S, Y))
        for i in range(B):
            for s in range(S):
                for y in range(Y):
                    served[i, s, y] = sol.value(v["served"][i, s, y, r])
                    theta[i, s, y] = sol.value(v["theta"][i, s, y, r])
                    if case.solar_candidates[i]:
                        solar[i, s, y] = sol.value(v["sol"][i, s, y, r])
        flow = np.zeros((L, S, Y))
        for l in range(L):
            for s in range(S):
                for y in range(Y):
                    flow[l, s, y] = sol.value(v["flow"][l, s, y, r])
        # zero out open-line leakage within solver tolerance and report the
        # score at its floor, the value every optimal solution can take
        flow = flow * plan.line_energized
        score = psi * (plan.line_energized - case.config.delta * plan.aux)
        out.append(DispatchSolution(
            gen=gen, gen_segment=tuple(segs), solar_dispatch=solar,
            served=served, scheduled=ctx.realized[r].demand.copy(), flow=flow,
            angle=theta, score=score,
        ))
    return out


def solve_master(ctx: MasterContext, options: SolveOptions | None = None
                 ) -> tuple[PlanDecision, float, list[DispatchSolution]]:
    """Solve the master; returns (plan, lower bound, dispatch per realization).

    The lower bound is the proven bound (equal to the objective at exact
    convergence). An infeasible master can only mean the risk tolerance is
    unreachable with the available assets, and raises accordingly.
    """
    from .ccga import RiskInfeasibleError

    p = ctx.problem if ctx.problem is not None else build_master(ctx)
    sol = solve_milp(p, options)
    if sol.status == "infeasible":
        raise RiskInfeasibleError(
            f"risk tolerance {ctx.case.config.risk_tolerance} is infeasible "
            f"with the existing assets")
    if sol.status == "unbounded":
        raise MilpError("master unbounded; investment costs must be nonnegative")
    if sol.status not in ("optimal",):
        raise MilpError(f"master stopped early: {sol.status} "
                        f"(nodes={sol.nodes}, pivots={sol.pivots})")
    plan = _extract_plan(ctx, sol)
    bad = plan.violations(ctx.case)
    if bad:
        raise MilpError("master produced an invalid plan: " + "; ".join(bad))
    lb = sol.best_bound if math.isfinite(sol.best_bound) else sol.objective
    lb = min(lb, sol.objective)
    dispatches = _extract_dispatches(ctx, sol, plan)
    return plan, lb, dispatches
