"""Domain model for multi-year grid expansion planning under ignition risk.

Value objects describing a planning instance (buses, generators, lines,
scenarios, configuration) plus the decision, uncertainty-realization, and
dispatch containers the solver stages exchange. Everything is immutable
after construction: numpy fields are copied and marked read-only, so
instances are safe to share across threads.

Conventions used throughout the package:

* years and scenarios are 0-indexed positionally; per-entity input tables
  are year-major ``[year][scenario]``; the stacked tensors on ``CaseData``
  are ``(entity, scenario, year)``;
* line flow is measured in the from->to direction, and the DC relation for
  a closed line is ``flow = (angle_from - angle_to) / reactance``;
* a "realization" fixes the adversarial up/down flags; realized demand is
  ``nominal + dev*u - dev*v`` and realized solar availability is the same
  expression clipped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "CaseError",
    "Bus",
    "Generator",
    "CostSegment",
    "Line",
    "Scenario",
    "PlanningConfig",
    "CaseData",
    "PlanDecision",
    "UncertaintyRealization",
    "DispatchSolution",
    "RealizedTables",
    "piecewise_linearize_cost",
    "apply_realization",
    "validate_case",
    "audit_dispatch",
]


class CaseError(ValueError):
    """Raised for structurally malformed instances or decision objects."""


def _ro(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CostSegment:
    """One piece of a piecewise-linear generation cost curve."""

    slope: float  # $/MWh
    capacity: float  # MW


@dataclass(frozen=True)
class Bus:
    """A network node with its demand and solar uncertainty tables.

    The four tables are year-major ``[year][scenario]`` arrays: nominal
    demand (MW), demand deviation magnitude (MW), nominal solar availability
    (fraction of installed capacity), and its deviation magnitude.
    """

    id: int
    nominal_demand: np.ndarray
    demand_deviation: np.ndarray
    solar_availability: np.ndarray
    solar_availability_deviation: np.ndarray
    solar_candidate: bool = False

    def __post_init__(self):
        for f in ("nominal_demand", "demand_deviation", "solar_availability",
                  "solar_availability_deviation"):
            a = _ro(getattr(self, f))
            if a.ndim != 2:
                raise CaseError(f"bus {self.id}: {f} must be a [year][scenario] table")
            object.__setattr__(self, f, a)


@dataclass(frozen=True)
class Generator:
    """A thermal unit with a quadratic cost curve and derived segments.

    quad_cost is (a, b, c) in $/h, $/MWh, $/MW^2h. `segments` may be given
    explicitly; when None, builders derive it with piecewise_linearize_cost.
    """

    id: str
    bus: int
    p_min: float
    p_max: float
    quad_cost: tuple[float, float, float] = (0.0, 0.0, 0.0)
    segments: tuple[CostSegment, ...] | None = None

    def __post_init__(self):
        if self.segments is not None:
            object.__setattr__(self, "segments", tuple(self.segments))

    def resolved_segments(self, num_segments: int) -> tuple[CostSegment, ...]:
        if self.segments is not None:
            return self.segments
        return piecewise_linearize_cost(self, num_segments)


@dataclass(frozen=True)
class Line:
    """A transmission corridor, existing or candidate.

    ignition_score is a year-major [year][scenario] table; its deviation
    table is a fixed (non-adversarial) additive term, zero by default.
    install_cost and modify_cost are per-year arrays; install_cost must be
    zero for existing lines.
    """

    id: str
    from_bus: int
    to_bus: int
    reactance: float
    rating: float
    existing: bool
    install_cost: np.ndarray
    modify_cost: np.ndarray
    ignition_score: np.ndarray
    ignition_score_deviation: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "install_cost", _ro(self.install_cost))
        object.__setattr__(self, "modify_cost", _ro(self.modify_cost))
        score = _ro(self.ignition_score)
        if score.ndim != 2:
            raise CaseError(f"line {self.id}: ignition_score must be a [year][scenario] table")
        object.__setattr__(self, "ignition_score", score)
        dev = self.ignition_score_deviation
        dev = np.zeros_like(score) if dev is None else np.array(dev, dtype=np.float64)
        if dev.shape != score.shape:
            raise CaseError(f"line {self.id}: ignition_score_deviation shape mismatch")
        dev.setflags(write=False)
        object.__setattr__(self, "ignition_score_deviation", dev)


@dataclass(frozen=True)
class Scenario:
    id: str
    hours_per_year: float  # share of the 8760-hour year this scenario covers
    label: str = ""


@dataclass(frozen=True)
class PlanningConfig:
    """Run-wide knobs: horizon, risk and uncertainty limits, prices.

    big_m of None means "derive from the instance" (see master module).
    epsilon is the convergence gap in dollars; with epsilon_relative it is
    interpreted as a fraction of the incumbent upper bound instead.
    """

    years: int
    risk_tolerance: float
    uncertainty_budget: int
    shed_penalty: float
    solar_cost: np.ndarray
    delta: float = 0.5
    big_m: float | None = None
    epsilon: float = 1.0
    epsilon_relative: bool = False
    max_iterations: int = 25
    num_segments: int = 3

    def __post_init__(self):
        object.__setattr__(self, "solar_cost", _ro(self.solar_cost))


class RealizedTables(NamedTuple):
    demand: np.ndarray  # (bus, scenario, year) MW
    solar_availability: np.ndarray  # (bus, scenario, year) in [0, 1]


def piecewise_linearize_cost(gen: Generator, num_segments: int) -> tuple[CostSegment, ...]:
    """Split [0, p_max] into equal segments priced at the midpoint marginal.

    The quadratic fuel cost a + b*P + c*P^2 has marginal cost b + 2c*P; each
    segment's slope is that marginal evaluated at the segment midpoint, which
    keeps slopes nondecreasing for c >= 0 and the greedy cheapest-first fill
    within the secant error of the quadratic on every interval. The constant
    term a never affects the argmin and is dropped.
    """
    if num_segments < 1:
        raise CaseError(f"generator {gen.id}: num_segments must be >= 1, got {num_segments}")
    if gen.p_max <= 0:
        raise CaseError(f"generator {gen.id}: p_max must be positive")
    _, b, c = gen.quad_cost
    if c < 0:
        raise CaseError(f"generator {gen.id}: negative quadratic coefficient (non-convex cost)")
    width = gen.p_max / num_segments
    out = []
    for z in range(num_segments):
        mid = (z + 0.5) * width
        out.append(CostSegment(slope=b + 2.0 * c * mid, capacity=width))
    return tuple(out)


class CaseData:
    """A planning instance with dense tensors derived from the entity lists.

    Tensors are (entity, scenario, year) ordered and read-only:

    ==================  =========  ===========================================
    demand_nominal      (B, S, Y)  nominal demand, MW
    demand_deviation    (B, S, Y)  adversarial demand deviation magnitude, MW
    solar_nominal       (B, S, Y)  nominal availability fraction
    solar_deviation     (B, S, Y)  availability deviation magnitude
    ignition            (L, S, Y)  per-line ignition score
    ignition_deviation  (L, S, Y)  fixed additive score term
    line_install_cost   (L, Y)     $ per installation year
    line_modify_cost    (L, Y)     $ per modification year
    solar_cost          (Y,)       $/MW of new capacity
    hours               (S,)       scenario hours per year
    ==================  =========  ===========================================
    """

    def __init__(self, buses, generators, lines, scenarios, config: PlanningConfig,
                 name: str = "case"):
        self.name = name
        self.provenance: tuple[str, ...] = ()  # defaulted-field log, set by loaders
        self.buses = tuple(buses)
        self.generators = tuple(generators)
        self.lines = tuple(lines)
        self.scenarios = tuple(scenarios)
        self.config = config

        self.bus_index = {}
        for k, b in enumerate(self.buses):
            if b.id in self.bus_index:
                raise CaseError(f"duplicate bus id {b.id}")
            self.bus_index[b.id] = k
        self.gen_index = {}
        for k, g in enumerate(self.generators):
            if g.id in self.gen_index:
                raise CaseError(f"duplicate generator id {g.id}")
            if g.bus not in self.bus_index:
                raise CaseError(f"generator {g.id}: unknown bus {g.bus}")
            self.gen_index[g.id] = k
        self.line_index = {}
        for k, ln in enumerate(self.lines):
            if ln.id in self.line_index:
                raise CaseError(f"duplicate line id {ln.id}")
            for end in (ln.from_bus, ln.to_bus):
                if end not in self.bus_index:
                    raise CaseError(f"line {ln.id}: unknown bus {end}")
            self.line_index[ln.id] = k
        if len({s.id for s in self.scenarios}) != len(self.scenarios):
            raise CaseError("duplicate scenario id")

        Y, S = config.years, len(self.scenarios)
        B, G, L = len(self.buses), len(self.generators), len(self.lines)
        self.n_years, self.n_scenarios = Y, S
        self.n_buses, self.n_gens, self.n_lines = B, G, L

        def bus_tensor(attr):
            out = np.zeros((B, S, Y))
            for k, b in enumerate(self.buses):
                t = getattr(b, attr)
                if t.shape != (Y, S):
                    raise CaseError(f"bus {b.id}: {attr} must have shape ({Y}, {S}), got {t.shape}")
                out[k] = t.T
            out.setflags(write=False)
            return out

        self.demand_nominal = bus_tensor("nominal_demand")
        self.demand_deviation = bus_tensor("demand_deviation")
        self.solar_nominal = bus_tensor("solar_availability")
        self.solar_deviation = bus_tensor("solar_availability_deviation")

        ign = np.zeros((L, S, Y))
        ign_dev = np.zeros((L, S, Y))
        inst = np.zeros((L, Y))
        modc = np.zeros((L, Y))
        for k, ln in enumerate(self.lines):
            if ln.ignition_score.shape != (Y, S):
                raise CaseError(f"line {ln.id}: ignition_score must have shape ({Y}, {S})")
            ign[k] = ln.ignition_score.T
            ign_dev[k] = ln.ignition_score_deviation.T
            for arr, tgt in ((ln.install_cost, inst), (ln.modify_cost, modc)):
                if arr.shape != (Y,):
                    raise CaseError(f"line {ln.id}: cost arrays must have length {Y}")
                tgt[k] = arr
        for a in (ign, ign_dev, inst, modc):
            a.setflags(write=False)
        self.ignition, self.ignition_deviation = ign, ign_dev
        self.line_install_cost, self.line_modify_cost = inst, modc

        if config.solar_cost.shape != (Y,):
            raise CaseError(f"config.solar_cost must have length {Y}")
        self.solar_cost = config.solar_cost
        self.hours = _ro([s.hours_per_year for s in self.scenarios])
        self.existing = _ro([ln.existing for ln in self.lines], dtype=bool)
        self.solar_candidates = _ro([b.solar_candidate for b in self.buses], dtype=bool)
        self.gen_bus = _ro([self.bus_index[g.bus] for g in self.generators], dtype=np.int64)
        self.line_from = _ro([self.bus_index[ln.from_bus] for ln in self.lines], dtype=np.int64)
        self.line_to = _ro([self.bus_index[ln.to_bus] for ln in self.lines], dtype=np.int64)
        # a broken cost curve becomes an empty segment tuple here and a
        # validate_case finding, not a construction failure
        segs = []
        for g in self.generators:
            try:
                segs.append(g.resolved_segments(config.num_segments))
            except CaseError:
                segs.append(())
        self.segments: tuple[tuple[CostSegment, ...], ...] = tuple(segs)

    @property
    def reference_bus(self) -> int:
        """Angle reference: the lowest-numbered bus hosting a generator."""
        if not self.generators:
            return 0
        return min(self.gen_bus[k] for k in range(self.n_gens))

    def validate(self) -> list[str]:
        return validate_case(self)

    def __repr__(self):
        return (f"CaseData({self.name!r}: {self.n_buses} buses, {self.n_gens} gens, "
                f"{self.n_lines} lines, {self.n_scenarios} scenarios, {self.n_years} years)")


def validate_case(case: CaseData) -> list[str]:
    """Check every value invariant; returns human-readable violations.

    Violations are data, not exceptions: an empty list means the case is fit
    for planning.
    """
    v: list[str] = []
    cfg = case.config

    hours = float(np.sum(case.hours))
    if abs(hours - 8760.0) > 1e-6:
        v.append(f"scenarios: hours_per_year sums to {hours}, expected 8760")
    for s in case.scenarios:
        if s.hours_per_year <= 0:
            v.append(f"scenario {s.id}: hours_per_year must be positive")

    max_slope = 0.0
    for g, segs in zip(case.generators, case.segments):
        if g.p_max <= 0:
            v.append(f"generator {g.id}: p_max must be positive")
        if not 0 <= g.p_min <= g.p_max:
            v.append(f"generator {g.id}: requires 0 <= p_min <= p_max")
        if not segs:
            v.append(f"generator {g.id}: cost curve yields no segments")
            continue
        total = sum(sg.capacity for sg in segs)
        if abs(total - g.p_max) > 1e-6 * max(1.0, g.p_max):
            v.append(f"generator {g.id}: segment capacities sum to {total}, expected {g.p_max}")
        for z, sg in enumerate(segs):
            if sg.slope < 0:
                v.append(f"generator {g.id}: segment {z} slope negative")
            if sg.capacity < 0:
                v.append(f"generator {g.id}: segment {z} capacity negative")
            max_slope = max(max_slope, sg.slope)

    if cfg.shed_penalty <= max_slope:
        v.append(f"config: shed_penalty {cfg.shed_penalty} must exceed every "
                 f"generation segment slope (max {max_slope})")
    if cfg.risk_tolerance < 0:
        v.append("config: risk_tolerance must be >= 0")
    if cfg.uncertainty_budget < 0 or cfg.uncertainty_budget != int(cfg.uncertainty_budget):
        v.append("config: uncertainty_budget must be a nonnegative integer")
    if not 0 <= cfg.delta <= 1:
        v.append("config: delta must lie in [0, 1]")
    if cfg.epsilon <= 0:
        v.append("config: epsilon must be positive")
    if cfg.years < 1:
        v.append("config: years must be >= 1")
    if np.any(case.solar_cost < 0):
        v.append("config: solar_cost entries must be >= 0")

    for ln in case.lines:
        if ln.reactance <= 0:
            v.append(f"line {ln.id}: reactance must be positive")
        if ln.rating <= 0:
            v.append(f"line {ln.id}: rating must be positive")
        if np.any(ln.ignition_score < 0) or np.any(ln.ignition_score >= 1):
            v.append(f"line {ln.id}: ignition_score must lie in [0, 1)")
        if ln.existing and np.any(ln.install_cost != 0):
            v.append(f"line {ln.id}: install_cost must be zero for existing lines")
        if np.any(ln.install_cost < 0) or np.any(ln.modify_cost < 0):
            v.append(f"line {ln.id}: costs must be >= 0")

    for b in case.buses:
        if np.any(b.nominal_demand < 0):
            v.append(f"bus {b.id}: nominal_demand must be >= 0")
        if np.any(b.demand_deviation < 0):
            v.append(f"bus {b.id}: demand_deviation must be >= 0")
        # downward realization must not drive demand negative, or the
        # served-demand box collapses and recourse loses feasibility
        if np.any(b.demand_deviation > b.nominal_demand + 1e-9):
            v.append(f"bus {b.id}: demand_deviation exceeds nominal_demand")
        if np.any(b.solar_availability < 0) or np.any(b.solar_availability > 1):
            v.append(f"bus {b.id}: solar_availability must lie in [0, 1]")
        if np.any(b.solar_availability_deviation < 0):
            v.append(f"bus {b.id}: solar_availability_deviation must be >= 0")

    return v


@dataclass(frozen=True)
class UncertaintyRealization:
    """Adversarial up/down flags, one of each channel per (bus, scenario, year).

    u raises, v lowers; u and v of one channel never fire together. Only
    u-flags consume the uncertainty budget.
    """

    u_demand: np.ndarray
    v_demand: np.ndarray
    u_solar: np.ndarray
    v_solar: np.ndarray

    def __post_init__(self):
        shape = None
        for f in ("u_demand", "v_demand", "u_solar", "v_solar"):
            a = _ro(getattr(self, f), dtype=np.int8)
            if shape is None:
                shape = a.shape
            elif a.shape != shape:
                raise CaseError("realization flag arrays must share one (bus, scenario, year) shape")
            object.__setattr__(self, f, a)

    @classmethod
    def zeros(cls, case: CaseData) -> "UncertaintyRealization":
        z = np.zeros((case.n_buses, case.n_scenarios, case.n_years), dtype=np.int8)
        return cls(z, z.copy(), z.copy(), z.copy())

    def flag_count(self) -> int:
        """Budget usage: number of active u-flags."""
        return int(self.u_demand.sum() + self.u_solar.sum())

    def violations(self) -> list[str]:
        out = []
        for f in ("u_demand", "v_demand", "u_solar", "v_solar"):
            a = getattr(self, f)
            if not np.all((a == 0) | (a == 1)):
                out.append(f"realization: {f} entries must be 0/1")
        if np.any(self.u_demand + self.v_demand > 1):
            out.append("realization: u_demand + v_demand > 1 somewhere")
        if np.any(self.u_solar + self.v_solar > 1):
            out.append("realization: u_solar + v_solar > 1 somewhere")
        return out

    def key(self) -> bytes:
        """Canonical byte key: flags interleaved per (bus, scenario, year).

        Lexicographic order on these keys is the package-wide tie-break
        order for equally-bad realizations.
        """
        stacked = np.stack(
            [self.u_demand, self.v_demand, self.u_solar, self.v_solar], axis=-1
        )
        return stacked.tobytes()


def apply_realization(case: CaseData, r: UncertaintyRealization) -> RealizedTables:
    """Evaluate the realized demand and solar availability tables.

    Pure: the case is never mutated. Demand moves by +-deviation as flagged;
    availability does the same and is then clipped to [0, 1].
    """
    demand = (case.demand_nominal
              + case.demand_deviation * r.u_demand
              - case.demand_deviation * r.v_demand)
    kappa = (case.solar_nominal
             + case.solar_deviation * r.u_solar
             - case.solar_deviation * r.v_solar)
    kappa = np.clip(kappa, 0.0, 1.0)
    demand.setflags(write=False)
    kappa.setflags(write=False)
    return RealizedTables(demand, kappa)


@dataclass(frozen=True)
class PlanDecision:
    """First-stage investment and switching decisions.

    line_exists/line_modified are (line, year); line_energized and aux are
    (line, scenario, year); solar_capacity is (bus, year) MW, nonzero only
    at candidate buses. aux marks lines both modified and energized.
    """

    line_exists: np.ndarray
    line_modified: np.ndarray
    line_energized: np.ndarray
    solar_capacity: np.ndarray
    aux: np.ndarray

    def __post_init__(self):
        for f in ("line_exists", "line_modified", "line_energized", "aux"):
            object.__setattr__(self, f, _ro(getattr(self, f), dtype=np.int8))
        object.__setattr__(self, "solar_capacity", _ro(self.solar_capacity))

    @classmethod
    def build(cls, line_exists, line_modified, line_energized, solar_capacity) -> "PlanDecision":
        """Construct with aux derived from its defining product."""
        le = np.asarray(line_energized, dtype=np.int8)
        lm = np.asarray(line_modified, dtype=np.int8)
        aux = le * lm[:, None, :]
        return cls(line_exists, lm, le, solar_capacity, aux)

    def violations(self, case: CaseData) -> list[str]:
        out = []
        ex, mod, en = self.line_exists, self.line_modified, self.line_energized
        if np.any(np.diff(ex, axis=1) < 0):
            out.append("plan: line_exists must be nondecreasing over years")
        if np.any(np.diff(mod, axis=1) < 0):
            out.append("plan: line_modified must be nondecreasing over years")
        if np.any(np.diff(self.solar_capacity, axis=1) < -1e-9):
            out.append("plan: solar_capacity must be nondecreasing over years")
        if np.any(self.solar_capacity < -1e-9):
            out.append("plan: solar_capacity must be >= 0")
        if np.any(en > ex[:, None, :]):
            out.append("plan: line_energized may be 1 only where line_exists is 1")
        if np.any(ex[:, 0] < case.existing):
            out.append("plan: existing lines must have line_exists = 1 from year 1")
        if np.any(self.aux != en * mod[:, None, :]):
            out.append("plan: aux must equal line_modified * line_energized")
        off = ~case.solar_candidates
        if np.any(self.solar_capacity[off] > 1e-9):
            out.append("plan: solar_capacity positive at a non-candidate bus")
        return out

    def investment_cost(self, case: CaseData) -> float:
        """Total first-stage cost: installs, modifications, solar increments."""
        ex = self.line_exists.astype(np.float64)
        mod = self.line_modified.astype(np.float64)
        cap = self.solar_capacity
        dex = np.diff(np.concatenate([case.existing[:, None].astype(np.float64), ex], axis=1), axis=1)
        dmod = np.diff(np.concatenate([np.zeros((case.n_lines, 1)), mod], axis=1), axis=1)
        dcap = np.diff(np.concatenate([np.zeros((case.n_buses, 1)), cap], axis=1), axis=1)
        return float(
            np.sum(case.line_install_cost * dex)
            + np.sum(case.line_modify_cost * dmod)
            + np.sum(case.solar_cost[None, :] * dcap)
        )


@dataclass(frozen=True)
class DispatchSolution:
    """Second-stage operating point for one realization.

    gen_segment is a tuple of per-generator (segment, scenario, year) arrays;
    all other fields are dense (entity, scenario, year) tensors. scheduled is
    the realized demand the dispatch was solved against; served is what
    actually reaches customers.
    """

    gen: np.ndarray
    gen_segment: tuple[np.ndarray, ...]
    solar_dispatch: np.ndarray
    served: np.ndarray
    scheduled: np.ndarray
    flow: np.ndarray
    angle: np.ndarray
    score: np.ndarray

    def __post_init__(self):
        for f in ("gen", "solar_dispatch", "served", "scheduled", "flow", "angle", "score"):
            object.__setattr__(self, f, _ro(getattr(self, f)))
        object.__setattr__(self, "gen_segment", tuple(_ro(a) for a in self.gen_segment))

    def shed(self) -> np.ndarray:
        """Unserved demand (bus, scenario, year), MW."""
        return self.scheduled - self.served

    def operational_cost(self, case: CaseData) -> float:
        """Scenario-hour weighted generation cost plus shedding penalty."""
        return float(self.operational_cost_by_year(case).sum())

    def operational_cost_by_year(self, case: CaseData) -> np.ndarray:
        """Per-year operating cost, shape (years,)."""
        hours = case.hours
        out = np.zeros(case.n_years)
        for g, segs in enumerate(case.segments):
            seg_p = self.gen_segment[g]  # (Z, S, Y)
            for z, sg in enumerate(segs):
                out += np.sum(hours[:, None] * sg.slope * seg_p[z], axis=0)
        out += np.sum(hours[None, :, None] * case.config.shed_penalty
                      * (self.scheduled - self.served), axis=(0, 1))
        return out


def audit_dispatch(case: CaseData, plan: PlanDecision, r: UncertaintyRealization,
                   d: DispatchSolution) -> dict[str, float]:
    """Maximum violation of every operating constraint, keyed by rule.

    All entries of a clean dispatch are <= 1e-6. Flow rules follow the
    package flow convention (see module docstring): the DC residual is
    checked only on energized existing lines, and flow must vanish on
    de-energized ones.
    """
    real = apply_realization(case, r)
    out: dict[str, float] = {}

    seg_sum = np.zeros_like(d.gen)
    seg_cap = 0.0
    for g, segs in enumerate(case.segments):
        seg_p = d.gen_segment[g]
        seg_sum[g] = seg_p.sum(axis=0)
        for z, sg in enumerate(segs):
            seg_cap = max(seg_cap, float(np.max(seg_p[z] - sg.capacity, initial=0.0)))
            seg_cap = max(seg_cap, float(np.max(-seg_p[z], initial=0.0)))
    out["segment_sum"] = float(np.max(np.abs(seg_sum - d.gen), initial=0.0))
    out["segment_cap"] = seg_cap

    pmin = np.array([g.p_min for g in case.generators])
    pmax = np.array([g.p_max for g in case.generators])
    out["gen_bounds"] = float(max(
        np.max(pmin[:, None, None] - d.gen, initial=0.0),
        np.max(d.gen - pmax[:, None, None], initial=0.0),
    ))

    cap = plan.solar_capacity[:, None, :] * real.solar_availability
    out["solar_cap"] = float(max(
        np.max(d.solar_dispatch - cap, initial=0.0),
        np.max(-d.solar_dispatch, initial=0.0),
    ))

    out["scheduled_match"] = float(np.max(np.abs(d.scheduled - real.demand), initial=0.0))
    out["served_box"] = float(max(
        np.max(d.served - d.scheduled, initial=0.0),
        np.max(-d.served, initial=0.0),
    ))

    # nodal balance: served + outgoing - incoming - generation - solar = 0
    bal = d.served.copy()
    for l in range(case.n_lines):
        bal[case.line_from[l]] += d.flow[l]
        bal[case.line_to[l]] -= d.flow[l]
    for g in range(case.n_gens):
        bal[case.gen_bus[g]] -= d.gen[g]
    bal -= d.solar_dispatch
    out["balance"] = float(np.max(np.abs(bal), initial=0.0))

    x = np.array([ln.reactance for ln in case.lines])
    ratings = np.array([ln.rating for ln in case.lines])
    dc = (d.angle[case.line_from] - d.angle[case.line_to]) / x[:, None, None] - d.flow
    closed = plan.line_energized.astype(bool)
    out["dc_flow"] = float(np.max(np.abs(np.where(closed, dc, 0.0)), initial=0.0))
    out["flow_open"] = float(np.max(np.abs(np.where(closed, 0.0, d.flow)), initial=0.0))
    lim = ratings[:, None, None] * plan.line_energized
    out["thermal"] = float(max(
        np.max(d.flow - lim, initial=0.0),
        np.max(-lim - d.flow, initial=0.0),
    ))

    # ignition score floor and per-(scenario, year) risk budget
    psi = case.ignition + case.ignition_deviation
    floor = psi * (plan.line_energized - case.config.delta * plan.aux)
    out["score_rule"] = float(max(
        np.max(floor - d.score, initial=0.0),
        np.max(-d.score, initial=0.0),
    ))
    out["risk_budget"] = float(np.max(d.score.sum(axis=0) - case.config.risk_tolerance,
                                      initial=0.0))
    return out
