"""Robust transmission expansion planning under wildfire ignition risk.

gridfire plans line construction, line hardening, distributed solar siting,
and preemptive de-energization over a multi-year horizon. The planning
problem is a two-stage robust program: investments are chosen before demand
and solar-output deviations realize, operations (dispatch, redispatch, load
shedding) after. It is solved by column-and-constraint generation: a master
investment problem over the realizations found so far alternates with a
worst-case search, until their bounds meet.

Heavy submodules (the MILP machinery pulls in numba) load lazily; importing
gridfire itself stays cheap.
"""

from __future__ import annotations

__version__ = "0.1.0"

_LAZY = {
    "model": ".model",
    "ingest": ".ingest",
    "milp": ".milp",
    "master": ".master",
    "subproblem": ".subproblem",
    "ccga": ".ccga",
    "oracle": ".oracle",
    "cli": ".cli",
}

__all__ = sorted(_LAZY) + ["__version__"]


def __getattr__(name: str):
    if name in _LAZY:
        import importlib

        mod = importlib.import_module(_LAZY[name], __name__)
        globals()[name] = mod
        return mod
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
