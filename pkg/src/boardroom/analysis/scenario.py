"""Scenarios: a configured election plus run parameters and sweep axes."""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field

from ..agents import AdversaryStrategy, VoterProfile, attach
from ..errors import InvalidConfig, StrategyPreconditionFailed, ValidationError
from ..protocol import ElectionConfig, validate_roster

PROTOCOLS = ("BVP1", "SPB")

# Sections of a sweep path and the object they address.
_SECTIONS = ("election", "physical", "behavior", "detection", "roster", "strategies")


@dataclass
class Scenario:
    config: ElectionConfig
    roster: list
    strategies: list = field(default_factory=list)
    protocol: str = "BVP1"
    trials: int = 1000
    seed: int = 0
    sweep: list = field(default_factory=list)  # [(path, [values...]), ...]
    provenance: list = field(default_factory=list, repr=False, compare=False)  # applied defaults

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValidationError("run.protocol", f"must be one of {PROTOCOLS}")
        if len(self.roster) != self.config.n:
            raise ValidationError("roster", f"{len(self.roster)} voters but n={self.config.n}")
        if self.trials < 1:
            raise ValidationError("run.trials", "must be >= 1")
        self.sweep = [(str(p), list(v)) for p, v in self.sweep]
        self.checked = False

    def check(self):
        """Validate config, roster and strategies once for the whole run."""
        self.config.validate()
        validate_roster(self.config, self.roster)
        attach(self.strategies, self.roster, self.config.variants, self.protocol)
        self.checked = True
        return self

    def points(self) -> list[dict]:
        """Parameter assignments of every sweep point (cartesian product)."""
        if not self.sweep:
            return [{}]
        paths = [p for p, _ in self.sweep]
        return [dict(zip(paths, combo)) for combo in itertools.product(*(v for _, v in self.sweep))]

    def at(self, params: dict) -> "Scenario":
        """Copy of this scenario with ``params`` applied and no sweep."""
        s = copy.deepcopy(self)
        s.sweep = []
        s.checked = False
        for path, value in params.items():
            set_path(s, path, value)
        try:
            s.check()
        except (InvalidConfig, StrategyPreconditionFailed) as e:
            raise ValidationError(",".join(params) or "scenario", str(e)) from None
        return s

    def with_protocol(self, protocol) -> "Scenario":
        s = copy.deepcopy(self)
        s.protocol = protocol
        s.checked = False
        return s


def set_path(scenario: Scenario, path: str, value):
    """Assign ``value`` at a dotted sweep path such as ``behavior.p_peek``.

    ``roster.<field>`` sets the field on every voter and
    ``strategies.<i>.<field>`` addresses one strategy.
    """
    parts = path.split(".")
    head = parts[0]
    if head not in _SECTIONS or len(parts) < 2:
        raise ValidationError(path, f"sweep path must start with one of {_SECTIONS}")
    cfg = scenario.config
    if head == "election":
        if parts[1] in ("n",):
            raise ValidationError(path, "n cannot be swept; the roster is fixed")
        targets, attr = [cfg], parts[1]
    elif head in ("physical", "behavior", "detection"):
        targets, attr = [getattr(cfg, head)], parts[1]
    elif head == "roster":
        targets, attr = scenario.roster, parts[1]
    else:
        try:
            targets, attr = [scenario.strategies[int(parts[1])]], parts[2]
        except (ValueError, IndexError):
            raise ValidationError(path, "expected strategies.<index>.<field>") from None
    for t in targets:
        if not hasattr(t, attr):
            raise ValidationError(path, f"unknown field {attr!r}")
        if attr == "variants":
            value = frozenset(value)
        setattr(t, attr, value)
    if head == "roster":
        for v in scenario.roster:
            v.__post_init__()


def honest_roster(preferences, **profile) -> list:
    """Seat voters 0..n-1 in order with the given preferences."""
    return [VoterProfile(i, i, p, **profile) for i, p in enumerate(preferences)]


def strategy(kind, **kw) -> AdversaryStrategy:
    return AdversaryStrategy(kind, **kw)
