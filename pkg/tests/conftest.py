"""Shared fixture builders for the test suite."""

import numpy as np
import pytest

from gridfire.model import (
    Bus,
    CaseData,
    Generator,
    Line,
    PlanningConfig,
    Scenario,
)


def build_tiny_case() -> CaseData:
    """Three buses, one generator, two existing lines plus one candidate.

    Small enough that dispatches and costs can be checked by hand. Demand is
    flat across scenarios and years (bus 2: 50 MW, bus 3: 30 MW) and the
    generator can cover it all through the radial path 1-2-3.
    """
    years, flat = 2, lambda v: [[v, v], [v, v]]
    buses = [
        Bus(id=1, nominal_demand=flat(0.0), demand_deviation=flat(0.0),
            solar_availability=flat(0.0), solar_availability_deviation=flat(0.0)),
        Bus(id=2, nominal_demand=flat(50.0), demand_deviation=flat(10.0),
            solar_availability=flat(0.0), solar_availability_deviation=flat(0.0)),
        Bus(id=3, nominal_demand=flat(30.0), demand_deviation=flat(5.0),
            solar_availability=flat(0.5), solar_availability_deviation=flat(0.2),
            solar_candidate=True),
    ]
    gens = [
        Generator(id="GA", bus=1, p_min=0.0, p_max=150.0, quad_cost=(0.0, 10.0, 0.01)),
    ]
    lines = [
        Line(id="LA", from_bus=1, to_bus=2, reactance=0.1, rating=80.0, existing=True,
             install_cost=[0.0, 0.0], modify_cost=[5e4, 4e4],
             ignition_score=[[0.02, 0.30], [0.02, 0.30]]),
        Line(id="LB", from_bus=2, to_bus=3, reactance=0.2, rating=60.0, existing=True,
             install_cost=[0.0, 0.0], modify_cost=[6e4, 5e4],
             ignition_score=[[0.01, 0.20], [0.01, 0.20]]),
        Line(id="LC", from_bus=1, to_bus=3, reactance=0.25, rating=60.0, existing=False,
             install_cost=[1e5, 9e4], modify_cost=[7e4, 6e4],
             ignition_score=[[0.015, 0.25], [0.015, 0.25]]),
    ]
    scenarios = [
        Scenario(id="low", hours_per_year=8000.0, label="low fire risk"),
        Scenario(id="high", hours_per_year=760.0, label="high fire risk"),
    ]
    config = PlanningConfig(
        years=years, risk_tolerance=0.5, uncertainty_budget=2,
        shed_penalty=1000.0, solar_cost=[8e5, 7.5e5],
        delta=0.5, epsilon=1.0, num_segments=2,
    )
    return CaseData(buses, gens, lines, scenarios, config, name="tiny")


@pytest.fixture
def tiny_case() -> CaseData:
    return build_tiny_case()


def assert_clean(violations, allow=()):
    bad = [v for v in violations if not any(tag in v for tag in allow)]
    assert not bad, "unexpected violations:\n" + "\n".join(bad)


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
