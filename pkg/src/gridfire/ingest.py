"""Case and result persistence: JSON case files, CSV reports.

A case file is a single JSON document with a units header and dense arrays
(year-major tables, years ordered 1..Y). The loader is lenient about
shorthand -- scalars broadcast to full tables, missing deviation tables are
derived from fractional defaults in the config section -- and every applied
default is recorded once in the returned case's provenance log. The writer
always emits the canonical dense form, so load(write(case)) reproduces the
case field-for-field.

Report CSVs are written with '.' decimals, comma separators, LF newlines,
and 10-significant-digit floats, which makes them byte-stable for identical
inputs and solver seed.
"""

from __future__ import annotations

import json
import os
from typing import Any

import numpy as np

from .model import (
    Bus,
    CaseData,
    CaseError,
    CostSegment,
    Generator,
    Line,
    PlanDecision,
    PlanningConfig,
    Scenario,
    UncertaintyRealization,
    validate_case,
)

__all__ = [
    "load_case",
    "write_case",
    "cases_equal",
    "write_result",
    "save_result",
    "load_result",
    "bundled_case_path",
]

_UNITS = {"power": "MW", "energy": "MWh", "cost": "USD", "angle": "rad",
          "hours": "h/year", "availability": "fraction of installed capacity"}

_CONFIG_DEFAULTS = {
    "delta": 0.5,
    "big_m": None,
    "epsilon": 1.0,
    "epsilon_relative": False,
    "max_iterations": 25,
    "num_segments": 3,
}


def bundled_case_path(name: str) -> str:
    """Path of a case shipped with the package (e.g. "6bus")."""
    here = os.path.join(os.path.dirname(__file__), "cases", name + ".json")
    if not os.path.exists(here):
        raise CaseError(f"no bundled case named {name!r}")
    return here


def _table(raw: Any, years: int, scenarios: int, where: str) -> list[list[float]]:
    """Broadcast a scalar / per-year list into a dense [year][scenario] table."""
    if isinstance(raw, (int, float)):
        return [[float(raw)] * scenarios for _ in range(years)]
    if not isinstance(raw, list):
        raise CaseError(f"{where}: expected number or array, got {type(raw).__name__}")
    if raw and all(isinstance(v, (int, float)) for v in raw):
        if len(raw) != years:
            raise CaseError(f"{where}: per-year list must have length {years}, got {len(raw)}")
        return [[float(v)] * scenarios for v in raw]
    if len(raw) != years:
        raise CaseError(f"{where}: table must have {years} year rows, got {len(raw)}")
    out = []
    for y, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != scenarios:
            raise CaseError(f"{where}: year {y + 1} row must list {scenarios} scenario values")
        out.append([float(v) for v in row])
    return out


def _per_year(raw: Any, years: int, where: str) -> list[float]:
    if isinstance(raw, (int, float)):
        return [float(raw)] * years
    if not isinstance(raw, list) or len(raw) != years:
        raise CaseError(f"{where}: expected number or length-{years} array")
    return [float(v) for v in raw]


def _require(section: dict, key: str, where: str) -> Any:
    if key not in section:
        raise CaseError(f"{where}: missing required field {key!r}")
    return section[key]


def load_case(path: str, validate: bool = True) -> CaseData:
    """Parse a JSON case file into a CaseData.

    Defaults applied while loading (deviation tables derived from the
    config's fractional settings, omitted optional fields) are listed once
    each in the result's ``provenance`` tuple. With validate=True (the
    default) a case failing validate_case raises CaseError carrying every
    violation.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise CaseError(f"{path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise CaseError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise CaseError(f"{path}: top level must be an object")

    log: list[str] = []
    name = doc.get("name") or os.path.splitext(os.path.basename(path))[0]

    raw_cfg = _require(doc, "config", path)
    years = int(_require(raw_cfg, "years", "config"))
    raw_scen = _require(doc, "scenarios", path)
    if not isinstance(raw_scen, list) or not raw_scen:
        raise CaseError("scenarios: must be a nonempty array")
    scenarios = []
    for k, s in enumerate(raw_scen):
        where = f"scenarios[{k}]"
        scenarios.append(Scenario(
            id=str(_require(s, "id", where)),
            hours_per_year=float(_require(s, "hours_per_year", where)),
            label=str(s.get("label", "")),
        ))
    S = len(scenarios)

    kwargs: dict[str, Any] = {
        "years": years,
        "risk_tolerance": float(_require(raw_cfg, "risk_tolerance", "config")),
        "uncertainty_budget": int(_require(raw_cfg, "uncertainty_budget", "config")),
        "shed_penalty": float(_require(raw_cfg, "shed_penalty", "config")),
        "solar_cost": _per_year(_require(raw_cfg, "solar_cost", "config"), years,
                                "config.solar_cost"),
    }
    for key, default in _CONFIG_DEFAULTS.items():
        if key in raw_cfg:
            kwargs[key] = raw_cfg[key]
        else:
            kwargs[key] = default
            log.append(f"config.{key} = {default!r} (default)")
    config = PlanningConfig(**kwargs)

    demand_frac = float(raw_cfg.get("demand_deviation_fraction", 0.0))
    solar_frac = float(raw_cfg.get("solar_deviation_fraction", 0.0))

    buses = []
    for k, b in enumerate(doc.get("buses", [])):
        where = f"buses[{k}]"
        bus_id = int(_require(b, "id", where))
        nominal = _table(_require(b, "nominal_demand", where), years, S,
                         f"{where}.nominal_demand")
        if "demand_deviation" in b and b["demand_deviation"] is not None:
            dev = _table(b["demand_deviation"], years, S, f"{where}.demand_deviation")
        else:
            dev = [[demand_frac * v for v in row] for row in nominal]
            log.append(f"buses[id={bus_id}].demand_deviation = "
                       f"{demand_frac} * nominal_demand (defaulted)")
        if "solar_availability" in b and b["solar_availability"] is not None:
            kappa = _table(b["solar_availability"], years, S, f"{where}.solar_availability")
        else:
            kappa = [[0.0] * S for _ in range(years)]
            log.append(f"buses[id={bus_id}].solar_availability = 0 (defaulted)")
        if "solar_availability_deviation" in b and b["solar_availability_deviation"] is not None:
            kdev = _table(b["solar_availability_deviation"], years, S,
                          f"{where}.solar_availability_deviation")
        else:
            kdev = [[solar_frac * v for v in row] for row in kappa]
            log.append(f"buses[id={bus_id}].solar_availability_deviation = "
                       f"{solar_frac} * solar_availability (defaulted)")
        buses.append(Bus(
            id=bus_id, nominal_demand=nominal, demand_deviation=dev,
            solar_availability=kappa, solar_availability_deviation=kdev,
            solar_candidate=bool(b.get("solar_candidate", False)),
        ))

    gens = []
    for k, g in enumerate(doc.get("generators", [])):
        where = f"generators[{k}]"
        quad = g.get("quad_cost", [0.0, 0.0, 0.0])
        if not isinstance(quad, list) or len(quad) != 3:
            raise CaseError(f"{where}.quad_cost: expected [a, b, c]")
        segs = None
        if g.get("segments") is not None:
            segs = tuple(
                CostSegment(slope=float(sg["slope"]), capacity=float(sg["capacity"]))
                for sg in g["segments"]
            )
        gens.append(Generator(
            id=str(_require(g, "id", where)), bus=int(_require(g, "bus", where)),
            p_min=float(_require(g, "p_min", where)),
            p_max=float(_require(g, "p_max", where)),
            quad_cost=tuple(float(v) for v in quad), segments=segs,
        ))

    lines = []
    for k, ln in enumerate(doc.get("lines", [])):
        where = f"lines[{k}]"
        line_id = str(_require(ln, "id", where))
        if "ignition_score_deviation" in ln and ln["ignition_score_deviation"] is not None:
            ign_dev = _table(ln["ignition_score_deviation"], years, S,
                             f"{where}.ignition_score_deviation")
        else:
            ign_dev = None
            log.append(f"lines[id={line_id}].ignition_score_deviation = 0 (defaulted)")
        lines.append(Line(
            id=line_id,
            from_bus=int(_require(ln, "from_bus", where)),
            to_bus=int(_require(ln, "to_bus", where)),
            reactance=float(_require(ln, "reactance", where)),
            rating=float(_require(ln, "rating", where)),
            existing=bool(_require(ln, "existing", where)),
            install_cost=_per_year(ln.get("install_cost", 0.0), years,
                                   f"{where}.install_cost"),
            modify_cost=_per_year(ln.get("modify_cost", 0.0), years,
                                  f"{where}.modify_cost"),
            ignition_score=_table(_require(ln, "ignition_score", where), years, S,
                                  f"{where}.ignition_score"),
            ignition_score_deviation=ign_dev,
        ))

    case = CaseData(buses, gens, lines, scenarios, config, name=name)
    case.provenance = tuple(log)
    if validate:
        problems = validate_case(case)
        if problems:
            raise CaseError(f"{path}: case failed validation:\n  "
                            + "\n  ".join(problems))
    return case


def write_case(case: CaseData, path: str) -> str:
    """Serialize a case to canonical dense JSON; returns the path."""
    cfg = case.config
    doc = {
        "version": "1",
        "name": case.name,
        "units": dict(_UNITS),
        "config": {
            "years": cfg.years,
            "risk_tolerance": cfg.risk_tolerance,
            "uncertainty_budget": cfg.uncertainty_budget,
            "shed_penalty": cfg.shed_penalty,
            "solar_cost": cfg.solar_cost.tolist(),
            "delta": cfg.delta,
            "big_m": cfg.big_m,
            "epsilon": cfg.epsilon,
            "epsilon_relative": cfg.epsilon_relative,
            "max_iterations": cfg.max_iterations,
            "num_segments": cfg.num_segments,
        },
        "scenarios": [
            {"id": s.id, "hours_per_year": s.hours_per_year, "label": s.label}
            for s in case.scenarios
        ],
        "buses": [
            {
                "id": b.id,
                "nominal_demand": b.nominal_demand.tolist(),
                "demand_deviation": b.demand_deviation.tolist(),
                "solar_availability": b.solar_availability.tolist(),
                "solar_availability_deviation": b.solar_availability_deviation.tolist(),
                "solar_candidate": b.solar_candidate,
            }
            for b in case.buses
        ],
        "generators": [
            {
                "id": g.id,
                "bus": g.bus,
                "p_min": g.p_min,
                "p_max": g.p_max,
                "quad_cost": list(g.quad_cost),
                "segments": None if g.segments is None else [
                    {"slope": sg.slope, "capacity": sg.capacity} for sg in g.segments
                ],
            }
            for g in case.generators
        ],
        "lines": [
            {
                "id": ln.id,
                "from_bus": ln.from_bus,
                "to_bus": ln.to_bus,
                "reactance": ln.reactance,
                "rating": ln.rating,
                "existing": ln.existing,
                "install_cost": ln.install_cost.tolist(),
                "modify_cost": ln.modify_cost.tolist(),
                "ignition_score": ln.ignition_score.tolist(),
                "ignition_score_deviation": ln.ignition_score_deviation.tolist(),
            }
            for ln in case.lines
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return path


def cases_equal(a: CaseData, b: CaseData) -> bool:
    """Field-for-field equality over entities, scenarios, and config."""
    if (a.name != b.name or len(a.buses) != len(b.buses)
            or len(a.generators) != len(b.generators)
            or len(a.lines) != len(b.lines) or a.scenarios != b.scenarios):
        return False
    ca, cb = a.config, b.config
    for f in ("years", "risk_tolerance", "uncertainty_budget", "shed_penalty",
              "delta", "big_m", "epsilon", "epsilon_relative", "max_iterations",
              "num_segments"):
        if getattr(ca, f) != getattr(cb, f):
            return False
    if not np.array_equal(ca.solar_cost, cb.solar_cost):
        return False
    for x, y in zip(a.buses, b.buses):
        if x.id != y.id or x.solar_candidate != y.solar_candidate:
            return False
        for f in ("nominal_demand", "demand_deviation", "solar_availability",
                  "solar_availability_deviation"):
            if not np.array_equal(getattr(x, f), getattr(y, f)):
                return False
    for gx, gy in zip(a.generators, b.generators):
        if (gx.id, gx.bus, gx.p_min, gx.p_max, gx.quad_cost, gx.segments) != \
                (gy.id, gy.bus, gy.p_min, gy.p_max, gy.quad_cost, gy.segments):
            return False
    for lx, ly in zip(a.lines, b.lines):
        if (lx.id, lx.from_bus, lx.to_bus, lx.reactance, lx.rating, lx.existing) != \
                (ly.id, ly.from_bus, ly.to_bus, ly.reactance, ly.rating, ly.existing):
            return False
        for f in ("install_cost", "modify_cost", "ignition_score",
                  "ignition_score_deviation"):
            if not np.array_equal(getattr(lx, f), getattr(ly, f)):
                return False
    return True


# --- report CSVs ------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def _write_csv(path: str, header: str, rows) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return path


def write_result(result, out_dir: str, report: str = "worst") -> list[str]:
    """Emit the report CSV set for a finished run; returns written paths.

    ``report`` selects which realization's dispatch the shedding and cost
    tables reflect: "worst" (the robust operating point) or "nominal".
    """
    case = result.case
    plan = result.plan
    dispatch = result.report_dispatch(report)
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    hours = case.hours
    rows = []
    for l, ln in enumerate(case.lines):
        for y in range(case.n_years):
            total = float(np.dot(hours, plan.line_energized[l, :, y]))
            rows.append((ln.id, str(y + 1), _fmt(total)))
    paths.append(_write_csv(os.path.join(out_dir, "energized_hours.csv"),
                            "line_id,year,hours", rows))

    rows = []
    shed = dispatch.scheduled - dispatch.served
    for b, bus in enumerate(case.buses):
        for y in range(case.n_years):
            for s, scen in enumerate(case.scenarios):
                mwh = float(hours[s] * shed[b, s, y])
                if abs(mwh) > 1e-9:  # zero rows omitted
                    rows.append((str(bus.id), str(y + 1), scen.id, _fmt(mwh)))
    paths.append(_write_csv(os.path.join(out_dir, "load_shedding.csv"),
                            "bus_id,year,scenario,mwh_shed", rows))

    rows = []
    for b, bus in enumerate(case.buses):
        if not bus.solar_candidate:
            continue
        for y in range(case.n_years):
            rows.append((str(bus.id), str(y + 1), _fmt(plan.solar_capacity[b, y])))
    paths.append(_write_csv(os.path.join(out_dir, "installed_solar.csv"),
                            "bus_id,year,mw", rows))

    ex = plan.line_exists.astype(np.float64)
    mod = plan.line_modified.astype(np.float64)
    cap = plan.solar_capacity
    dex = np.diff(np.concatenate([case.existing[:, None].astype(np.float64), ex], axis=1))
    dmod = np.diff(np.concatenate([np.zeros((case.n_lines, 1)), mod], axis=1))
    dcap = np.diff(np.concatenate([np.zeros((case.n_buses, 1)), cap], axis=1))
    op_year = dispatch.operational_cost_by_year(case)
    rows = []
    for y in range(case.n_years):
        il = float(np.dot(case.line_install_cost[:, y], dex[:, y]))
        im = float(np.dot(case.line_modify_cost[:, y], dmod[:, y]))
        isol = float(case.solar_cost[y] * dcap[:, y].sum())
        op = float(op_year[y])
        rows.append((str(y + 1), _fmt(il), _fmt(im), _fmt(isol), _fmt(op),
                     _fmt(il + im + isol + op)))
    paths.append(_write_csv(os.path.join(out_dir, "cost_summary.csv"),
                            "year,invest_lines,invest_mod,invest_solar,operation,total",
                            rows))

    rows = []
    for it in result.iterations:
        rows.append((str(it.index), _fmt(it.lb), _fmt(it.ub), _fmt(it.gap),
                     _fmt(it.subproblem_ms), _fmt(it.master_ms)))
    paths.append(_write_csv(os.path.join(out_dir, "ccga_trace.csv"),
                            "iteration,lb,ub,gap,subproblem_ms,master_ms", rows))
    return paths


# --- result persistence -----------------------------------------------------

def _arr(a) -> list:
    return np.asarray(a).tolist()


def save_result(result, path: str) -> str:
    """Persist a run result as JSON so reports can be regenerated later."""
    doc = {
        "version": "1",
        "case": os.path.basename(getattr(result.case, "name", "case")),
        "lb": result.lb,
        "ub": result.ub,
        "converged": result.converged,
        "plan": {
            "line_exists": _arr(result.plan.line_exists),
            "line_modified": _arr(result.plan.line_modified),
            "line_energized": _arr(result.plan.line_energized),
            "solar_capacity": _arr(result.plan.solar_capacity),
            "aux": _arr(result.plan.aux),
        },
        "worst_realization": {
            "u_demand": _arr(result.worst_realization.u_demand),
            "v_demand": _arr(result.worst_realization.v_demand),
            "u_solar": _arr(result.worst_realization.u_solar),
            "v_solar": _arr(result.worst_realization.v_solar),
        },
        "iterations": [
            {"index": it.index, "lb": it.lb, "ub": it.ub, "gap": it.gap,
             "subproblem_ms": it.subproblem_ms, "master_ms": it.master_ms,
             "realization_flags": it.realization_flags}
            for it in result.iterations
        ],
        "dispatches": {
            label: {
                "gen": _arr(d.gen),
                "gen_segment": [_arr(a) for a in d.gen_segment],
                "solar_dispatch": _arr(d.solar_dispatch),
                "served": _arr(d.served),
                "scheduled": _arr(d.scheduled),
                "flow": _arr(d.flow),
                "angle": _arr(d.angle),
                "score": _arr(d.score),
            }
            for label, d in result.labeled_dispatches().items()
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return path


def load_result(path: str, case: CaseData):
    """Rebuild a RobustPlanResult from save_result output plus its case."""
    from .ccga import IterationRecord, RobustPlanResult
    from .model import DispatchSolution

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    plan = PlanDecision(
        line_exists=doc["plan"]["line_exists"],
        line_modified=doc["plan"]["line_modified"],
        line_energized=doc["plan"]["line_energized"],
        solar_capacity=doc["plan"]["solar_capacity"],
        aux=doc["plan"]["aux"],
    )
    worst = UncertaintyRealization(
        u_demand=doc["worst_realization"]["u_demand"],
        v_demand=doc["worst_realization"]["v_demand"],
        u_solar=doc["worst_realization"]["u_solar"],
        v_solar=doc["worst_realization"]["v_solar"],
    )
    iterations = [
        IterationRecord(index=it["index"], lb=it["lb"], ub=it["ub"], gap=it["gap"],
                        subproblem_ms=it["subproblem_ms"], master_ms=it["master_ms"],
                        realization_flags=it["realization_flags"])
        for it in doc["iterations"]
    ]
    dispatches = {}
    for label, d in doc["dispatches"].items():
        dispatches[label] = DispatchSolution(
            gen=d["gen"], gen_segment=tuple(np.array(a) for a in d["gen_segment"]),
            solar_dispatch=d["solar_dispatch"], served=d["served"],
            scheduled=d["scheduled"], flow=d["flow"], angle=d["angle"],
            score=d["score"],
        )
    return RobustPlanResult(
        case=case, plan=plan, lb=doc["lb"], ub=doc["ub"],
        converged=doc["converged"], worst_realization=worst,
        iterations=tuple(iterations), dispatches=dispatches,
    )
