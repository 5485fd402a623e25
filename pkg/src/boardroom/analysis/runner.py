"""One trial end to end, and the seeded Monte Carlo loop over many."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .. import events as ev
from .. import knowledge as kn
from ..agents import StrategyKind, coerced_response
from ..protocol import simulate_bvp1, simulate_spb
from ..rand import trial_rng
from .scenario import Scenario
from .stats import Accumulator

SCHEMA_VERSION = 1

OBSERVERS_EXTRA = (ev.EA, ev.OUTSIDER)


@dataclass
class RunMetrics:
    outcome: str  # "elected" | "annulled:<reason>"
    winner: int | None
    integrity_violated: bool
    cast_violated: bool  # some ballot not cast as intended
    collected_violated: bool  # box holds foreign ballots or lost one at casting
    counted_violated: bool  # a ballot was swapped between box and reveal
    violation_detected: bool
    annulled: bool
    false_annulment: bool
    objections: int
    valid_objections: int | None
    privacy_breach: bool
    breached_voters: int
    min_anonymity: int  # per voter: smallest anonymity set over all other observers
    disclosure_sizes: tuple  # per voter: smallest disclosure set over all other observers
    anonymity_sizes: tuple
    coerced: int = 0
    coercion_caught: int = 0
    equivocation_failed: int = 0
    claim_collision: bool = False
    detected: dict = field(default_factory=dict)  # strategy kind -> bool
    integrity_events: int = 0
    steps: int = 0
    voters: int = 0

    @property
    def undetected_violation(self) -> bool:
        return self.integrity_violated and not self.violation_detected

    def rate_items(self):
        yield "integrity_violated", int(self.integrity_violated), 1
        yield "cast_violated", int(self.cast_violated), 1
        yield "collected_violated", int(self.collected_violated), 1
        yield "counted_violated", int(self.counted_violated), 1
        yield "violation_detected", int(self.violation_detected), 1
        yield "undetected_violation", int(self.undetected_violation), 1
        yield "annulled", int(self.annulled), 1
        yield "false_annulment", int(self.false_annulment), 1
        yield "privacy_breach", int(self.privacy_breach), 1
        yield "voter_breached", self.breached_voters, self.voters
        yield "claim_collision", int(self.claim_collision), 1
        if self.coerced:
            yield "coercion_caught", self.coercion_caught, self.coerced
            yield "equivocation_failed", self.equivocation_failed, self.coerced
        for kind, hit in self.detected.items():
            yield f"detected:{kind}", int(hit), 1

    def sum_items(self):
        yield "objections", self.objections, 1
        yield "anonymity_size", sum(self.anonymity_sizes), len(self.anonymity_sizes)
        yield "disclosure_size", sum(self.disclosure_sizes), len(self.disclosure_sizes)
        yield "steps_per_voter", self.steps, self.voters

    def hist_items(self):
        yield "disclosure_size", self.disclosure_sizes
        yield "outcome", (self.outcome,)


def _simulate(scenario: Scenario, rng):
    sim = simulate_bvp1 if scenario.protocol == "BVP1" else simulate_spb
    if not scenario.checked:
        scenario.check()
    return sim(scenario.config, scenario.roster, scenario.strategies, rng, checked=True)


def run_trial(scenario: Scenario, trial: int, point: int = 0) -> RunMetrics:
    """Simulate trial ``trial`` of sweep point ``point`` and score it."""
    rng = trial_rng(scenario.seed, trial, point)
    state = _simulate(scenario, rng)
    return score(state, scenario, rng)


# -- scoring ----------------------------------------------------------------


def _integrity(state):
    roster = state.roster
    k = state.config.k
    truth = [0] * k
    for v in roster:
        if v.id in state.believed:
            truth[v.intent] += 1
    tally = state.tally
    published = list(tally.counts) if tally is not None else truth
    cast_bad = {v.id for v in roster if v.id in state.cast_choice and state.cast_choice[v.id] != v.intent}
    collected_bad = False
    if state.revealed:
        own = set(state.own_serial.values())
        swapped_in = set(state.replaced.values())
        found = {b.serial for b in state.revealed[0]}
        lost = own - found - set(state.replaced)
        foreign = found - own - swapped_in
        collected_bad = bool(lost or foreign)
    victims = set(cast_bad)
    lost_to = {s for s in state.removed}
    for v, s in state.own_serial.items():
        if s in lost_to:
            victims.add(v)
    return published != truth, bool(cast_bad), collected_bad, bool(state.replaced), victims


def _detections(state):
    detected = {}
    n_integrity = 0
    for s in state.strategies:
        detected.setdefault(s.kind.value, False)
    for e in state.log.flagged:
        if e.kind in ev.INTEGRITY_KINDS:
            n_integrity += 1
            if e.kind == ev.STRATEGY_DETECTED:
                detected[e.data[0]] = True
            elif e.kind == ev.MULTIPLE_CAST:
                detected[StrategyKind.DOUBLE_CAST.value] = True
            elif e.kind == ev.COLUMNS_MISMATCH:
                detected[StrategyKind.FEINT_STAMP.value] = True
    return detected, n_integrity


def _privacy(state, log):
    """Per-voter smallest anonymity and disclosure sets over other observers."""
    views = state.views[0] if state.views else ()
    if not views:
        return [], [], 0, {}
    choices = [b.choice for b in views]
    distinct = set(choices)
    full = len(views)
    if not log.private and state.adjudication is None and state.protocol == "BVP1":
        # Only public events: nobody holds a constraint, so every set is the pool.
        casters = len(state.own_serial)
        return [full] * casters, [len(distinct)] * casters, 0, {}
    casters = [e.data[0] for e in log.events if e.kind == ev.CAST_ORDER and e.data[2] == 0]
    voters = [v.id for v in state.roster]
    observers = voters + list(OBSERVERS_EXTRA)
    knowledge = kn.build_all(log.events, observers)
    anon = {v: full for v in casters}
    disc = {v: len(distinct) for v in casters}
    cache = {}
    for o in observers:
        k = knowledge[o]
        if not k.constrained:
            continue
        key = id(k)
        sets = cache.get(key)
        if sets is None:
            sets = cache[key] = kn.anonymity_sets(k, views, casters)
        for v, s in sets.items():
            if v == o:
                continue
            if len(s) < anon[v]:
                anon[v] = len(s)
            d = len({choices[b] for b in s})
            if d < disc[v]:
                disc[v] = d
    unanimous = len(distinct) <= 1
    breached = 0 if unanimous else sum(1 for v in casters if disc[v] == 1)
    return [anon[v] for v in casters], [disc[v] for v in casters], breached, knowledge


def _coercion(state, knowledge, rng):
    if not state.coercions or not state.views:
        return 0, 0, 0, False
    views = state.views[0]
    position = {b.serial: i for i, b in enumerate(state.revealed[0])}
    caught = failed = 0
    claims = []
    for vid in sorted(state.coercions):
        adversary, demand = state.coercions[vid]
        own = position.get(state.own_serial.get(vid))
        claim = coerced_response(state.voter(vid), views, demand, rng, own)
        if claim is None:
            failed += 1
            caught += 1
            continue
        claims.append(claim)
        adv = knowledge.get(adversary)
        if adv is None:
            adv = kn.build(state.log.events, adversary)
        if kn.coercion_catch(adv, vid, claim, rng, views):
            caught += 1
    return len(state.coercions), caught, failed, len(set(claims)) < len(claims)


def score(state, scenario: Scenario, rng) -> RunMetrics:
    log = state.log
    out = state.outcome
    violated, cast_bad, collected_bad, counted_bad, victims = _integrity(state)
    detected, n_integrity = _detections(state)
    valid = 0
    if state.adjudication is not None and state.adjudication.valid:
        valid = sum(state.adjudication.valid.values())
    objectors = set(state.objectors())
    violation_detected = violated and (
        n_integrity > 0 or bool(objectors & victims) or valid > 0
        or (state.audit is not None and not state.audit.passed))
    annulled = out.kind == "annulled"
    anon, disc, breached, knowledge = _privacy(state, log)
    coerced, caught, failed, collision = _coercion(state, knowledge, rng)
    return RunMetrics(
        outcome=out.kind if out.reason is None else f"{out.kind}:{out.reason}",
        winner=out.winner,
        integrity_violated=violated,
        cast_violated=cast_bad,
        collected_violated=collected_bad,
        counted_violated=counted_bad,
        violation_detected=violation_detected,
        annulled=annulled,
        false_annulment=annulled and out.reason == "objection-threshold" and not violated,
        objections=len(state.objections),
        valid_objections=state.adjudication.j_valid if state.adjudication else None,
        privacy_breach=breached > 0,
        breached_voters=breached,
        min_anonymity=min(anon) if anon else 0,
        disclosure_sizes=tuple(disc),
        anonymity_sizes=tuple(anon),
        coerced=coerced,
        coercion_caught=caught,
        equivocation_failed=failed,
        claim_collision=collision,
        detected=detected,
        integrity_events=n_integrity,
        steps=len(log),
        voters=len(state.roster),
    )


# -- Monte Carlo ------------------------------------------------------------


def _run_chunk(scenario: Scenario, point: int, start: int, stop: int) -> Accumulator:
    acc = Accumulator()
    for t in range(start, stop):
        acc.add(run_trial(scenario, t, point))
    return acc


def _chunks(trials, workers):
    size = max(1, -(-trials // (workers * 4)))
    return [(a, min(trials, a + size)) for a in range(0, trials, size)]


def monte_carlo(scenario: Scenario, workers: int = 1, trials: int | None = None) -> dict:
    """Aggregate report over every trial of every sweep point.

    Trials are seeded by (seed, point, trial) alone and aggregated with
    integer sums, so the report does not depend on ``workers``.
    """
    trials = scenario.trials if trials is None else trials
    points = scenario.points()
    concrete = [scenario.at(p) for p in points]
    accs = []
    if workers <= 1:
        for i, s in enumerate(concrete):
            accs.append(_run_chunk(s, i, 0, trials))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                [pool.submit(_run_chunk, s, i, a, b) for a, b in _chunks(trials, workers)]
                for i, s in enumerate(concrete)
            ]
            for fs in futures:
                acc = Accumulator()
                for f in fs:
                    acc = acc.merge(f.result())
                accs.append(acc)
    return {
        "schema_version": SCHEMA_VERSION,
        "protocol": scenario.protocol,
        "seed": scenario.seed,
        "trials": trials,
        "points": [
            {"index": i, "params": {k: _plain(v) for k, v in p.items()}, **acc.summary()}
            for i, (p, acc) in enumerate(zip(points, accs))
        ],
    }


def _plain(v):
    if isinstance(v, (set, frozenset)):
        return sorted(v)
    return v
