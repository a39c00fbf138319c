"""Unit tests for the domain model: cost curves, realizations, audits."""

import numpy as np
import pytest

from gridfire.model import (
    Bus,
    CaseData,
    CaseError,
    CostSegment,
    DispatchSolution,
    Generator,
    Line,
    PlanDecision,
    PlanningConfig,
    Scenario,
    UncertaintyRealization,
    apply_realization,
    audit_dispatch,
    piecewise_linearize_cost,
    validate_case,
)

from conftest import build_tiny_case


# --- piecewise cost curves -------------------------------------------------

def test_single_segment_prices_at_midpoint_marginal():
    g = Generator(id="G2", bus=1, p_min=10.0, p_max=100.0, quad_cost=(130.0, 40.0, 0.001))
    segs = piecewise_linearize_cost(g, 1)
    assert len(segs) == 1
    assert segs[0].slope == pytest.approx(40.1, abs=1e-12)
    assert segs[0].capacity == pytest.approx(100.0)


def test_two_segments_equal_width():
    g = Generator(id="G1", bus=1, p_min=100.0, p_max=220.0, quad_cost=(177.0, 13.5, 0.00045))
    segs = piecewise_linearize_cost(g, 2)
    assert [s.capacity for s in segs] == pytest.approx([110.0, 110.0])
    assert segs[0].slope == pytest.approx(13.5495, abs=1e-12)
    assert segs[1].slope == pytest.approx(13.6485, abs=1e-12)


def test_segments_nondecreasing_and_cover_pmax():
    r = np.random.default_rng(7)
    for _ in range(50):
        g = Generator(id="g", bus=1, p_min=0.0, p_max=float(r.uniform(1, 500)),
                      quad_cost=(float(r.uniform(0, 200)), float(r.uniform(1, 50)),
                                 float(r.uniform(0, 0.01))))
        n = int(r.integers(1, 8))
        segs = piecewise_linearize_cost(g, n)
        slopes = [s.slope for s in segs]
        assert slopes == sorted(slopes)
        assert sum(s.capacity for s in segs) == pytest.approx(g.p_max)


def test_linearize_rejects_bad_inputs():
    g = Generator(id="g", bus=1, p_min=0.0, p_max=100.0, quad_cost=(0.0, 5.0, 0.0))
    with pytest.raises(CaseError):
        piecewise_linearize_cost(g, 0)
    gc = Generator(id="g", bus=1, p_min=0.0, p_max=100.0, quad_cost=(0.0, 5.0, -1e-4))
    with pytest.raises(CaseError):
        piecewise_linearize_cost(gc, 2)
    gz = Generator(id="g", bus=1, p_min=0.0, p_max=0.0, quad_cost=(0.0, 5.0, 0.0))
    with pytest.raises(CaseError):
        piecewise_linearize_cost(gz, 2)


def test_explicit_segments_win_over_derivation():
    segs = (CostSegment(slope=3.0, capacity=40.0), CostSegment(slope=9.0, capacity=60.0))
    g = Generator(id="g", bus=1, p_min=0.0, p_max=100.0, quad_cost=(1.0, 2.0, 3.0),
                  segments=segs)
    assert g.resolved_segments(5) == segs


# --- realizations ----------------------------------------------------------

def test_zero_realization_reproduces_nominal(tiny_case):
    r = UncertaintyRealization.zeros(tiny_case)
    real = apply_realization(tiny_case, r)
    np.testing.assert_allclose(real.demand, tiny_case.demand_nominal)
    np.testing.assert_allclose(real.solar_availability, tiny_case.solar_nominal)
    assert r.flag_count() == 0
    assert r.violations() == []


def test_realization_moves_and_clips(tiny_case):
    z = np.zeros((3, 2, 2), dtype=np.int8)
    u_d, u_s = z.copy(), z.copy()
    u_d[1, 0, 0] = 1  # bus 2 demand up in (low, year 1)
    u_s[2, :, :] = 1  # bus 3 availability up everywhere
    r = UncertaintyRealization(u_demand=u_d, v_demand=z, u_solar=u_s, v_solar=z)
    real = apply_realization(tiny_case, r)
    assert real.demand[1, 0, 0] == pytest.approx(60.0)
    assert real.demand[1, 1, 0] == pytest.approx(50.0)
    # 0.5 + 0.2 stays unclipped; a larger deviation would hit the 1.0 lid
    assert real.solar_availability[2, 0, 0] == pytest.approx(0.7)
    assert r.flag_count() == 1 + 4


def test_realization_clip_at_one():
    flat = lambda v: [[v]]
    bus = Bus(id=1, nominal_demand=flat(10.0), demand_deviation=flat(2.0),
              solar_availability=flat(0.95), solar_availability_deviation=flat(0.10),
              solar_candidate=True)
    gen = Generator(id="g", bus=1, p_min=0.0, p_max=50.0, quad_cost=(0.0, 5.0, 0.0))
    cfg = PlanningConfig(years=1, risk_tolerance=1.0, uncertainty_budget=1,
                         shed_penalty=100.0, solar_cost=[1e5])
    case = CaseData([bus], [gen], [], [Scenario(id="s", hours_per_year=8760.0)], cfg)
    one = np.ones((1, 1, 1), dtype=np.int8)
    zero = np.zeros_like(one)
    up = UncertaintyRealization(zero, zero, one, zero)
    dn = UncertaintyRealization(zero, zero, zero, one)
    assert apply_realization(case, up).solar_availability[0, 0, 0] == pytest.approx(1.0)
    assert apply_realization(case, dn).solar_availability[0, 0, 0] == pytest.approx(0.85)


def test_realization_key_orders_and_distinguishes(tiny_case):
    a = UncertaintyRealization.zeros(tiny_case)
    u = np.zeros((3, 2, 2), dtype=np.int8)
    u[0, 0, 0] = 1
    b = UncertaintyRealization(u, np.zeros_like(u), np.zeros_like(u), np.zeros_like(u))
    assert a.key() != b.key()
    assert a.key() < b.key()  # all-zeros sorts first
    assert a.key() == UncertaintyRealization.zeros(tiny_case).key()


def test_realization_rejects_simultaneous_up_down(tiny_case):
    one = np.ones((3, 2, 2), dtype=np.int8)
    r = UncertaintyRealization(one, one, np.zeros_like(one), np.zeros_like(one))
    assert any("u_demand + v_demand" in msg for msg in r.violations())


def test_realization_shape_mismatch_raises():
    a = np.zeros((2, 1, 1), dtype=np.int8)
    b = np.zeros((3, 1, 1), dtype=np.int8)
    with pytest.raises(CaseError):
        UncertaintyRealization(a, a.copy(), b, b.copy())


# --- case construction and validation --------------------------------------

def test_tensor_layout_transposes_year_major_tables():
    flat = lambda v: [[v, v], [v, v]]
    table = [[50.0, 55.0], [52.0, 57.0]]  # [year][scenario]
    buses = [
        Bus(id=1, nominal_demand=table, demand_deviation=flat(0.0),
            solar_availability=flat(0.0), solar_availability_deviation=flat(0.0)),
    ]
    gens = [Generator(id="g", bus=1, p_min=0.0, p_max=100.0, quad_cost=(0.0, 5.0, 0.0))]
    cfg = PlanningConfig(years=2, risk_tolerance=1.0, uncertainty_budget=0,
                         shed_penalty=100.0, solar_cost=[0.0, 0.0])
    scen = [Scenario(id="a", hours_per_year=8000.0), Scenario(id="b", hours_per_year=760.0)]
    case = CaseData(buses, gens, [], scen, cfg)
    # tensor is (bus, scenario, year)
    assert case.demand_nominal[0, 0, 0] == 50.0
    assert case.demand_nominal[0, 1, 0] == 55.0
    assert case.demand_nominal[0, 0, 1] == 52.0
    assert case.demand_nominal[0, 1, 1] == 57.0
    assert not case.demand_nominal.flags.writeable


def test_duplicate_and_unknown_ids_raise(tiny_case):
    buses = list(tiny_case.buses)
    gens = list(tiny_case.generators)
    lines = list(tiny_case.lines)
    scen = list(tiny_case.scenarios)
    cfg = tiny_case.config
    with pytest.raises(CaseError, match="duplicate bus"):
        CaseData(buses + [buses[0]], gens, lines, scen, cfg)
    with pytest.raises(CaseError, match="unknown bus"):
        CaseData(buses, [Generator(id="gx", bus=99, p_min=0, p_max=10)], lines, scen, cfg)
    with pytest.raises(CaseError, match="unknown bus"):
        bad = Line(id="LX", from_bus=1, to_bus=99, reactance=0.1, rating=10.0,
                   existing=True, install_cost=[0, 0], modify_cost=[0, 0],
                   ignition_score=[[0, 0], [0, 0]])
        CaseData(buses, gens, lines + [bad], scen, cfg)
    with pytest.raises(CaseError, match="duplicate line"):
        CaseData(buses, gens, lines + [lines[0]], scen, cfg)


def test_validate_clean_case(tiny_case):
    assert validate_case(tiny_case) == []


def test_validate_flags_bad_values(tiny_case):
    flat = lambda v: [[v, v], [v, v]]
    buses = list(tiny_case.buses)
    # deviation above nominal demand
    buses[1] = Bus(id=2, nominal_demand=flat(50.0), demand_deviation=flat(50.1),
                   solar_availability=flat(0.0), solar_availability_deviation=flat(0.0))
    case = CaseData(buses, tiny_case.generators, tiny_case.lines, tiny_case.scenarios,
                    tiny_case.config)
    assert any("demand_deviation exceeds" in m for m in case.validate())

    scen = [Scenario(id="a", hours_per_year=4000.0), Scenario(id="b", hours_per_year=760.0)]
    case = CaseData(tiny_case.buses, tiny_case.generators, tiny_case.lines, scen,
                    tiny_case.config)
    assert any("8760" in m for m in case.validate())

    cfg = PlanningConfig(years=2, risk_tolerance=0.5, uncertainty_budget=2,
                         shed_penalty=10.0, solar_cost=[8e5, 7.5e5], num_segments=2)
    case = CaseData(tiny_case.buses, tiny_case.generators, tiny_case.lines,
                    tiny_case.scenarios, cfg)
    assert any("shed_penalty" in m for m in case.validate())

    lines = list(tiny_case.lines)
    lines[0] = Line(id="LA", from_bus=1, to_bus=2, reactance=0.1, rating=80.0,
                    existing=True, install_cost=[5.0, 0.0], modify_cost=[0, 0],
                    ignition_score=[[0.02, 1.0], [0.02, 0.3]])
    case = CaseData(tiny_case.buses, tiny_case.generators, lines, tiny_case.scenarios,
                    tiny_case.config)
    msgs = case.validate()
    assert any("install_cost must be zero" in m for m in msgs)
    assert any("ignition_score must lie in" in m for m in msgs)


def test_reference_bus_is_lowest_generator_bus(tiny_case):
    assert tiny_case.reference_bus == 0  # generator sits at bus id 1, index 0


# --- plans, dispatches, audits ---------------------------------------------

def _nominal_plan(case):
    """Energize exactly the existing lines, build nothing."""
    L, S, Y, B = case.n_lines, case.n_scenarios, case.n_years, case.n_buses
    exists = np.tile(case.existing[:, None], (1, Y)).astype(np.int8)
    energized = np.tile(case.existing[:, None, None], (1, S, Y)).astype(np.int8)
    return PlanDecision.build(
        line_exists=exists,
        line_modified=np.zeros((L, Y), dtype=np.int8),
        line_energized=energized,
        solar_capacity=np.zeros((B, Y)),
    )


def _nominal_dispatch(case, plan):
    """Hand-built feasible operating point for the tiny case, all (s, y) alike."""
    S, Y = case.n_scenarios, case.n_years
    gen = np.full((1, S, Y), 80.0)
    seg = np.zeros((2, S, Y))
    seg[0, :, :] = 75.0
    seg[1, :, :] = 5.0
    flow = np.zeros((3, S, Y))
    flow[0] = 80.0  # line 1-2
    flow[1] = 30.0  # line 2-3
    angle = np.zeros((3, S, Y))
    angle[1] = -8.0   # (angle_from - angle_to) / x = (0 - -8) / 0.1 = 80
    angle[2] = -14.0  # (-8 - -14) / 0.2 = 30
    served = case.demand_nominal.copy()
    scheduled = case.demand_nominal.copy()
    psi = case.ignition + case.ignition_deviation
    score = psi * plan.line_energized
    return DispatchSolution(
        gen=gen, gen_segment=(seg,), solar_dispatch=np.zeros((3, S, Y)),
        served=served, scheduled=scheduled, flow=flow, angle=angle, score=score,
    )


def test_plan_violations_clean_and_dirty(tiny_case):
    plan = _nominal_plan(tiny_case)
    assert plan.violations(tiny_case) == []

    bad = PlanDecision(
        line_exists=np.array([[1, 0], [1, 1], [0, 0]], dtype=np.int8),  # drops LA
        line_modified=np.zeros((3, 2), dtype=np.int8),
        line_energized=np.ones((3, 2, 2), dtype=np.int8),  # energizes missing LC
        solar_capacity=np.array([[0.0, 0.0], [5.0, 4.0], [0.0, 0.0]]),  # shrinks, non-candidate
        aux=np.ones((3, 2, 2), dtype=np.int8),  # wrong product
    )
    msgs = bad.violations(tiny_case)
    for needle in ("nondecreasing over years", "line_energized may be 1 only",
                   "aux must equal", "non-candidate bus", "solar_capacity must be nondecreasing"):
        assert any(needle in m for m in msgs), f"missing: {needle}"


def test_investment_cost_frozen_value(tiny_case):
    exists = np.array([[1, 1], [1, 1], [0, 1]], dtype=np.int8)  # LC built in year 2
    modified = np.array([[1, 1], [0, 0], [0, 0]], dtype=np.int8)  # LA hardened in year 1
    energized = np.tile(exists[:, None, :], (1, 2, 1))
    solar = np.array([[0.0, 0.0], [0.0, 0.0], [20.0, 20.0]])  # 20 MW at bus 3, year 1
    plan = PlanDecision.build(exists, modified, energized, solar)
    assert plan.violations(tiny_case) == []
    # 9e4 (LC in year 2) + 5e4 (LA in year 1) + 20 * 8e5 (solar in year 1)
    assert plan.investment_cost(tiny_case) == pytest.approx(16_140_000.0)


def test_nominal_dispatch_audits_clean(tiny_case):
    plan = _nominal_plan(tiny_case)
    d = _nominal_dispatch(tiny_case, plan)
    r = UncertaintyRealization.zeros(tiny_case)
    audit = audit_dispatch(tiny_case, plan, r, d)
    for rule, worst in audit.items():
        assert worst <= 1e-6, f"{rule} violated by {worst}"


def test_operational_cost_frozen_value(tiny_case):
    plan = _nominal_plan(tiny_case)
    d = _nominal_dispatch(tiny_case, plan)
    # (8000 + 760) hours * (75 * 10.75 + 5 * 12.25) $/h * 2 years, no shedding
    assert d.operational_cost(tiny_case) == pytest.approx(15_198_600.0)
    assert float(d.shed().max()) == 0.0


def test_audit_catches_each_rule(tiny_case):
    plan = _nominal_plan(tiny_case)
    base = _nominal_dispatch(tiny_case, plan)
    r = UncertaintyRealization.zeros(tiny_case)

    def mutated(**kw):
        fields = dict(
            gen=base.gen, gen_segment=base.gen_segment,
            solar_dispatch=base.solar_dispatch, served=base.served,
            scheduled=base.scheduled, flow=base.flow, angle=base.angle,
            score=base.score,
        )
        fields.update(kw)
        return DispatchSolution(**fields)

    flow = np.array(base.flow)
    flow[2, 0, 0] = 5.0  # flow on the open candidate line
    audit = audit_dispatch(tiny_case, plan, r, mutated(flow=flow))
    assert audit["flow_open"] == pytest.approx(5.0)
    assert audit["balance"] > 1.0  # the injected flow unbalances both ends

    flow = np.array(base.flow)
    flow[0, :, :] = 90.0  # above the 80 MW rating
    audit = audit_dispatch(tiny_case, plan, r, mutated(flow=flow))
    assert audit["thermal"] == pytest.approx(10.0)

    angle = np.array(base.angle)
    angle[1, 0, 0] = 0.0  # breaks the closed-line DC relation
    audit = audit_dispatch(tiny_case, plan, r, mutated(angle=angle))
    assert audit["dc_flow"] == pytest.approx(80.0)

    score = np.array(base.score)
    score[0, 1, 0] = 0.0  # below the ignition floor of the energized line
    audit = audit_dispatch(tiny_case, plan, r, mutated(score=score))
    assert audit["score_rule"] == pytest.approx(0.30)

    served = np.array(base.served)
    served[1, 0, 0] = 55.0  # serving above scheduled demand
    audit = audit_dispatch(tiny_case, plan, r, mutated(served=served))
    assert audit["served_box"] == pytest.approx(5.0)

    seg = np.array(base.gen_segment[0])
    seg[0, 0, 0] = 80.0  # beyond the 75 MW segment width
    audit = audit_dispatch(tiny_case, plan, r, mutated(gen_segment=(seg,)))
    assert audit["segment_cap"] == pytest.approx(5.0)
    assert audit["segment_sum"] == pytest.approx(5.0)

    sol = np.array(base.solar_dispatch)
    sol[2, 0, 0] = 3.0  # no capacity installed
    audit = audit_dispatch(tiny_case, plan, r, mutated(solar_dispatch=sol))
    assert audit["solar_cap"] == pytest.approx(3.0)
    assert audit["balance"] == pytest.approx(3.0)


def test_risk_budget_rule_fires_when_tolerance_shrinks(tiny_case):
    cfg = PlanningConfig(years=2, risk_tolerance=0.4, uncertainty_budget=2,
                         shed_penalty=1000.0, solar_cost=[8e5, 7.5e5], num_segments=2)
    case = CaseData(tiny_case.buses, tiny_case.generators, tiny_case.lines,
                    tiny_case.scenarios, cfg)
    plan = _nominal_plan(case)
    d = _nominal_dispatch(case, plan)
    audit = audit_dispatch(case, plan, UncertaintyRealization.zeros(case), d)
    # high scenario scores total 0.50 against a tolerance of 0.40
    assert audit["risk_budget"] == pytest.approx(0.10)


def test_case_repr_mentions_shape(tiny_case):
    assert "3 buses" in repr(tiny_case)
    assert "tiny" in repr(tiny_case)


def test_tiny_case_shared_fixture_is_fresh(tiny_case):
    again = build_tiny_case()
    assert again is not tiny_case
    np.testing.assert_allclose(again.demand_nominal, tiny_case.demand_nominal)
