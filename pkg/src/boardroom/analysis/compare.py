"""Side-by-side BVP1 vs. SPB runs of the same scenario."""

from __future__ import annotations

import copy

from ..errors import MismatchedScenarios
from .runner import SCHEMA_VERSION, monte_carlo
from .scenario import Scenario

HEADLINE_RATES = ("undetected_violation", "integrity_violated", "annulled", "privacy_breach")
HEADLINE_MEANS = ("disclosure_size", "anonymity_size", "steps_per_voter")


def _fingerprint(s: Scenario):
    c = copy.copy(s)
    c.protocol = None
    return repr(c)


def compare_protocols(a: Scenario, b: Scenario, workers: int = 1) -> dict:
    """Run both scenarios and line up their headline metrics per sweep point."""
    if _fingerprint(a) != _fingerprint(b):
        raise MismatchedScenarios("scenarios differ in more than the protocol field")
    if a.protocol == b.protocol:
        raise MismatchedScenarios("both scenarios use the same protocol")
    reports = {s.protocol: monte_carlo(s, workers) for s in (a, b)}
    points = []
    first = reports[a.protocol]["points"]
    for i, pt in enumerate(first):
        row = {"index": i, "params": pt["params"], "protocols": {}}
        for name, rep in reports.items():
            p = rep["points"][i]
            row["protocols"][name] = {
                **{r: p["rates"][r]["rate"] for r in HEADLINE_RATES},
                **{m: p["means"][m]["mean"] for m in HEADLINE_MEANS},
            }
        points.append(row)
    return {"schema_version": SCHEMA_VERSION, "seed": a.seed, "trials": a.trials,
            "points": points, "reports": reports}
