"""Case file I/O, defaults and provenance, report CSVs, result persistence."""

import json
import os

import numpy as np
import pytest

from gridfire.ccga import IterationRecord, RobustPlanResult
from gridfire.ingest import (
    bundled_case_path,
    cases_equal,
    load_case,
    load_result,
    save_result,
    write_case,
    write_result,
)
from gridfire.model import (
    CaseError,
    DispatchSolution,
    PlanDecision,
    UncertaintyRealization,
)

from conftest import build_tiny_case


def test_bundled_six_bus_loads_with_expected_shape():
    case = load_case(bundled_case_path("6bus"))
    assert case.n_buses == 6
    assert case.n_gens == 3
    assert case.n_lines == 9
    assert int(case.existing.sum()) == 7
    assert [ln.id for ln in case.lines if not ln.existing] == ["L8", "L9"]
    assert case.demand_nominal[:, 0, 0].sum() == pytest.approx(1078.0)
    assert case.hours.sum() == pytest.approx(8760.0)
    assert case.validate() == []


def test_bundled_variants_load_clean():
    for name in ("6bus_low", "6bus_high", "2bus"):
        case = load_case(bundled_case_path(name))
        assert case.validate() == []
    with pytest.raises(CaseError, match="no bundled case"):
        bundled_case_path("nope")


def test_round_trip_field_for_field(tmp_path, tiny_case):
    path = str(tmp_path / "tiny.json")
    write_case(tiny_case, path)
    again = load_case(path)
    assert cases_equal(tiny_case, again)
    # canonical writer output has no defaulted fields left to log
    assert again.provenance == ()
    # and a second write round-trips byte-identically
    path2 = str(tmp_path / "tiny2.json")
    write_case(again, path2)
    assert open(path).read() == open(path2).read()


def test_round_trip_bundled_cases(tmp_path):
    for name in ("6bus", "6bus_low", "6bus_high", "2bus"):
        case = load_case(bundled_case_path(name))
        path = str(tmp_path / f"{name}.json")
        write_case(case, path)
        assert cases_equal(case, load_case(path)), name


def test_defaults_recorded_once_in_provenance(tmp_path):
    doc = {
        "name": "mini",
        "config": {
            "years": 1, "risk_tolerance": 1.0, "uncertainty_budget": 1,
            "shed_penalty": 100.0, "solar_cost": [1e5],
            "demand_deviation_fraction": 0.2,
        },
        "scenarios": [{"id": "s", "hours_per_year": 8760.0}],
        "buses": [
            {"id": 1, "nominal_demand": 50.0, "solar_availability": 0.4,
             "solar_candidate": True},
        ],
        "generators": [
            {"id": "g", "bus": 1, "p_min": 0.0, "p_max": 100.0,
             "quad_cost": [0.0, 5.0, 0.0]},
        ],
        "lines": [],
    }
    path = str(tmp_path / "mini.json")
    with open(path, "w") as fh:
        json.dump(doc, fh)
    case = load_case(path)
    # fractional default applied to the omitted deviation table
    assert case.demand_deviation[0, 0, 0] == pytest.approx(10.0)
    assert case.solar_deviation[0, 0, 0] == pytest.approx(0.0)
    dev_entries = [p for p in case.provenance if "demand_deviation" in p]
    assert len(dev_entries) == 1
    assert "buses[id=1]" in dev_entries[0]
    # config defaults (delta, epsilon, ...) logged exactly once each
    assert sum("config.delta" in p for p in case.provenance) == 1
    seen = set()
    for p in case.provenance:
        assert p not in seen, f"duplicate provenance entry: {p}"
        seen.add(p)


def test_parse_error_carries_location(tmp_path):
    path = str(tmp_path / "broken.json")
    with open(path, "w") as fh:
        fh.write('{"config": [,]}')
    with pytest.raises(CaseError, match=r"broken\.json:1:"):
        load_case(path)
    with pytest.raises(CaseError, match="missing required field"):
        p2 = str(tmp_path / "empty.json")
        with open(p2, "w") as fh:
            fh.write("{}")
        load_case(p2)


def test_unknown_bus_reference_names_the_line(tmp_path, tiny_case):
    path = str(tmp_path / "bad.json")
    write_case(tiny_case, path)
    with open(path) as fh:
        doc = json.load(fh)
    doc["lines"][0]["to_bus"] = 99
    with open(path, "w") as fh:
        json.dump(doc, fh)
    with pytest.raises(CaseError, match="LA.*unknown bus|unknown bus 99"):
        load_case(path)


def test_validation_failure_aggregates(tmp_path, tiny_case):
    path = str(tmp_path / "bad.json")
    write_case(tiny_case, path)
    with open(path) as fh:
        doc = json.load(fh)
    doc["config"]["shed_penalty"] = 1.0  # below segment slopes
    doc["scenarios"][0]["hours_per_year"] = 1.0  # breaks the 8760 sum
    with open(path, "w") as fh:
        json.dump(doc, fh)
    with pytest.raises(CaseError) as err:
        load_case(path)
    assert "shed_penalty" in str(err.value) and "8760" in str(err.value)
    case = load_case(path, validate=False)
    assert len(case.validate()) >= 2


# --- result CSVs and persistence --------------------------------------------

def _fake_result(case):
    """Hand-assembled converged result over the tiny case."""
    L, S, Y, B = case.n_lines, case.n_scenarios, case.n_years, case.n_buses
    exists = np.tile(case.existing[:, None], (1, Y)).astype(np.int8)
    energized = np.tile(case.existing[:, None, None], (1, S, Y)).astype(np.int8)
    energized[0, 1, :] = 0  # line LA off in the high scenario
    plan = PlanDecision.build(
        line_exists=exists, line_modified=np.zeros((L, Y), dtype=np.int8),
        line_energized=energized,
        solar_capacity=np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 10.0]]),
    )
    gen = np.full((1, S, Y), 60.0)
    seg = np.zeros((2, S, Y))
    seg[0] = 60.0
    scheduled = case.demand_nominal.copy()
    served = scheduled.copy()
    served[1, 1, :] -= 2.5  # shed 2.5 MW at bus 2 in the high scenario
    d = DispatchSolution(
        gen=gen, gen_segment=(seg,), solar_dispatch=np.zeros((B, S, Y)),
        served=served, scheduled=scheduled, flow=np.zeros((L, S, Y)),
        angle=np.zeros((B, S, Y)), score=case.ignition * energized,
    )
    return RobustPlanResult(
        case=case, plan=plan, lb=100.0, ub=100.5, converged=True,
        worst_realization=UncertaintyRealization.zeros(case),
        iterations=(
            IterationRecord(0, 90.0, 120.0, 30.0, 12.5, 40.0, 0),
            IterationRecord(1, 100.0, 100.5, 0.5, 11.0, 40.25, 1),
        ),
        dispatches={"nominal": d, "worst": d},
    )


def test_write_result_manifest_and_content(tmp_path, tiny_case):
    result = _fake_result(tiny_case)
    out = str(tmp_path / "run")
    paths = write_result(result, out)
    names = sorted(os.path.basename(p) for p in paths)
    assert names == ["ccga_trace.csv", "cost_summary.csv", "energized_hours.csv",
                     "installed_solar.csv", "load_shedding.csv"]

    hours = {}
    with open(os.path.join(out, "energized_hours.csv")) as fh:
        assert fh.readline().strip() == "line_id,year,hours"
        for row in fh:
            lid, year, h = row.strip().split(",")
            hours[(lid, int(year))] = float(h)
    assert hours[("LA", 1)] == pytest.approx(8000.0)  # off in the 760 h scenario
    assert hours[("LB", 1)] == pytest.approx(8760.0)
    assert hours[("LC", 1)] == 0.0  # never installed

    with open(os.path.join(out, "load_shedding.csv")) as fh:
        rows = [r.strip().split(",") for r in fh][1:]
    # only the nonzero shed rows appear: bus 2, high scenario, both years
    assert len(rows) == 2
    for bus_id, year, scen, mwh in rows:
        assert (bus_id, scen) == ("2", "high")
        assert float(mwh) == pytest.approx(760.0 * 2.5)

    with open(os.path.join(out, "installed_solar.csv")) as fh:
        rows = [r.strip().split(",") for r in fh][1:]
    assert rows == [["3", "1", "10"], ["3", "2", "10"]]

    with open(os.path.join(out, "cost_summary.csv")) as fh:
        header = fh.readline().strip()
        assert header == "year,invest_lines,invest_mod,invest_solar,operation,total"
        y1 = fh.readline().strip().split(",")
    # year 1: no installs/mods, 10 MW * 8e5 solar
    assert float(y1[1]) == 0.0 and float(y1[2]) == 0.0
    assert float(y1[3]) == pytest.approx(8e6)
    assert float(y1[5]) == pytest.approx(float(y1[3]) + float(y1[4]))

    with open(os.path.join(out, "ccga_trace.csv")) as fh:
        rows = [r.strip().split(",") for r in fh][1:]
    assert [r[0] for r in rows] == ["0", "1"]
    assert float(rows[1][3]) == pytest.approx(0.5)


def test_write_result_bit_stable(tmp_path, tiny_case):
    result = _fake_result(tiny_case)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    for path_a, path_b in zip(write_result(result, a), write_result(result, b)):
        assert open(path_a, "rb").read() == open(path_b, "rb").read()


def test_result_persistence_regenerates_identical_reports(tmp_path, tiny_case):
    result = _fake_result(tiny_case)
    saved = save_result(result, str(tmp_path / "result.json"))
    again = load_result(saved, tiny_case)
    assert again.lb == result.lb and again.ub == result.ub
    assert again.converged is True
    np.testing.assert_array_equal(again.plan.line_energized, result.plan.line_energized)
    a, b = str(tmp_path / "orig"), str(tmp_path / "regen")
    for path_a, path_b in zip(write_result(result, a), write_result(again, b)):
        assert open(path_a, "rb").read() == open(path_b, "rb").read()


def test_report_dispatch_selector(tiny_case):
    result = _fake_result(tiny_case)
    assert result.report_dispatch("worst") is result.dispatches["worst"]
    assert result.report_dispatch("nominal") is result.dispatches["nominal"]
    with pytest.raises(ValueError):
        result.report_dispatch("median")
    result.dispatches.pop("worst")
    assert result.report_dispatch("worst") is result.dispatches["nominal"]
