"""Regenerate the bundled case files under src/gridfire/cases/.

The six-bus system is a reconstruction: published characteristics (units,
lines, per-year score totals, net demand) are kept exactly, while the
quantities the source never states (bus-level demand split, solar
availability, investment prices, deviation magnitudes) are fixture
parameters chosen so the qualitative behavior of the two wind studies is
reproducible. Those choices live in the constants below, in one place.

Run from the repository root:

    python3 tools/build_cases.py
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gridfire.ingest import write_case  # noqa: E402
from gridfire.model import (  # noqa: E402
    Bus,
    CaseData,
    Generator,
    Line,
    PlanningConfig,
    Scenario,
)

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "gridfire", "cases")

# line id -> (from, to, reactance p.u., rating MW, existing,
#             year-1 score low wind, year-1 score high wind)
LINES = {
    "L1": (1, 2, 0.20, 200.0, True, 0.0743, 0.6330),
    "L2": (2, 3, 0.25, 100.0, True, 0.0375, 0.6432),
    "L3": (1, 4, 0.20, 100.0, True, 0.0251, 0.6483),
    "L4": (2, 4, 0.10, 100.0, True, 0.0189, 0.6534),
    "L5": (4, 5, 0.40, 100.0, True, 0.0152, 0.6584),
    "L6": (5, 6, 0.30, 100.0, True, 0.0127, 0.6636),
    "L7": (3, 6, 0.10, 100.0, True, 0.0109, 0.6687),
    "L8": (3, 5, 0.26, 100.0, False, 0.0096, 0.6738),
    "L9": (2, 5, 0.30, 100.0, False, 0.0086, 0.6789),
}

# unit -> (bus, p_min, p_max, a, b, c)
GENERATORS = {
    "G1": (1, 100.0, 220.0, 177.0, 13.5, 0.00045),
    "G2": (2, 10.0, 100.0, 130.0, 40.0, 0.001),
    "G3": (6, 10.0, 40.0, 137.0, 17.7, 0.005),
}

# ten-year system-wide trajectories; per-line scores scale with the
# year-over-year ratio of the matching total
TOTAL_SCORE_LOW = [0.21, 0.22, 0.23, 0.24, 0.25, 0.20, 0.19, 0.18, 0.17, 0.16]
TOTAL_SCORE_HIGH = [5.92, 6.38, 6.83, 7.29, 7.75, 5.37, 5.09, 4.83, 4.57, 4.49]
NET_DEMAND = [1078.0, 1099.0, 1121.0, 1144.0, 1167.0, 1190.0, 1214.0, 1238.0,
              1263.0, 1288.0]

# fixture parameters (reconstructed, not published)
DEMAND_SHARES = {3: 0.3, 4: 0.3, 5: 0.4}
SOLAR_CANDIDATES = (3, 4, 5, 6)
SOLAR_AVAILABILITY = 0.32
DEVIATION_FRACTION = 0.10  # +-10% on demand and solar availability
LINE_INSTALL_COST = 2.0e6
LINE_MODIFY_COST = 5.0e6
SOLAR_COST_PER_MW = 1.5e6
SHED_PENALTY = 2000.0
STUDY_DEMAND_SCALE = 0.25  # single-wind studies run a down-scaled system


def _scale(totals):
    return [t / totals[0] for t in totals]


def build_six_bus(name: str, scenarios: list[tuple[str, float, str]],
                  demand_scale: float, risk_tolerance: float,
                  uncertainty_budget: int, epsilon: float) -> CaseData:
    years = len(NET_DEMAND)
    scen_objs = [Scenario(id=sid, hours_per_year=h, label=lbl)
                 for sid, h, lbl in scenarios]
    scale_by_scen = {"low": _scale(TOTAL_SCORE_LOW), "high": _scale(TOTAL_SCORE_HIGH)}

    buses = []
    for bid in range(1, 7):
        share = DEMAND_SHARES.get(bid, 0.0)
        demand = [[share * demand_scale * NET_DEMAND[y]] * len(scen_objs)
                  for y in range(years)]
        dev = [[DEVIATION_FRACTION * v for v in row] for row in demand]
        candidate = bid in SOLAR_CANDIDATES
        kappa = SOLAR_AVAILABILITY if candidate else 0.0
        buses.append(Bus(
            id=bid, nominal_demand=demand, demand_deviation=dev,
            solar_availability=[[kappa] * len(scen_objs)] * years,
            solar_availability_deviation=[[DEVIATION_FRACTION * kappa]
                                          * len(scen_objs)] * years,
            solar_candidate=candidate,
        ))

    gens = [Generator(id=gid, bus=b, p_min=lo, p_max=hi, quad_cost=(a, bb, c))
            for gid, (b, lo, hi, a, bb, c) in GENERATORS.items()]

    lines = []
    for lid, (fb, tb, x, rating, existing, s_low, s_high) in LINES.items():
        base = {"low": s_low, "high": s_high}
        score = [[base[sid] * scale_by_scen[sid][y] for sid, _, _ in scenarios]
                 for y in range(years)]
        lines.append(Line(
            id=lid, from_bus=fb, to_bus=tb, reactance=x, rating=rating,
            existing=existing,
            install_cost=[0.0 if existing else LINE_INSTALL_COST] * years,
            modify_cost=[LINE_MODIFY_COST] * years,
            ignition_score=score,
        ))

    config = PlanningConfig(
        years=years, risk_tolerance=risk_tolerance,
        uncertainty_budget=uncertainty_budget, shed_penalty=SHED_PENALTY,
        solar_cost=[SOLAR_COST_PER_MW] * years, delta=0.5,
        epsilon=epsilon, max_iterations=12, num_segments=3,
    )
    return CaseData(buses, gens, lines, scen_objs, config, name=name)


def build_two_bus() -> CaseData:
    """Minimal sweep fixture: one line, one generator, one load, solar option."""
    years = 2
    scen = [Scenario(id="low", hours_per_year=8000.0, label="low wind"),
            Scenario(id="high", hours_per_year=760.0, label="high wind")]
    buses = [
        Bus(id=1, nominal_demand=[[0.0, 0.0]] * years,
            demand_deviation=[[0.0, 0.0]] * years,
            solar_availability=[[0.0, 0.0]] * years,
            solar_availability_deviation=[[0.0, 0.0]] * years),
        Bus(id=2, nominal_demand=[[60.0, 60.0], [66.0, 66.0]],
            demand_deviation=[[6.0, 6.0], [6.6, 6.6]],
            solar_availability=[[0.30, 0.30]] * years,
            solar_availability_deviation=[[0.03, 0.03]] * years,
            solar_candidate=True),
    ]
    gens = [Generator(id="G1", bus=1, p_min=0.0, p_max=80.0, quad_cost=(0.0, 20.0, 0.001))]
    lines = [Line(
        id="L1", from_bus=1, to_bus=2, reactance=0.2, rating=100.0, existing=True,
        install_cost=[0.0, 0.0], modify_cost=[5e4, 5e4],
        ignition_score=[[0.05, 0.40], [0.05, 0.44]],
    )]
    config = PlanningConfig(
        years=years, risk_tolerance=0.30, uncertainty_budget=1,
        shed_penalty=500.0, solar_cost=[2e5, 1.8e5], delta=0.5,
        epsilon=1.0, max_iterations=25, num_segments=2,
    )
    return CaseData(buses, gens, lines, scen, config, name="2bus")


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    cases = [
        build_six_bus(
            "6bus",
            [("low", 8000.0, "low wind speed"), ("high", 760.0, "high wind speed")],
            demand_scale=1.0, risk_tolerance=2.0, uncertainty_budget=4,
            epsilon=1e3,
        ),
        build_six_bus(
            "6bus_low", [("low", 8760.0, "low wind speed")],
            demand_scale=STUDY_DEMAND_SCALE, risk_tolerance=0.20,
            uncertainty_budget=2, epsilon=1e3,
        ),
        build_six_bus(
            "6bus_high", [("high", 8760.0, "high wind speed")],
            demand_scale=STUDY_DEMAND_SCALE, risk_tolerance=2.0,
            uncertainty_budget=2, epsilon=1e3,
        ),
        build_two_bus(),
    ]
    for case in cases:
        problems = case.validate()
        if problems:
            raise SystemExit(f"{case.name}: invalid fixture:\n  " + "\n  ".join(problems))
        path = write_case(case, os.path.join(OUT_DIR, case.name + ".json"))
        print(f"wrote {os.path.relpath(path)}")


if __name__ == "__main__":
    main()
