"""BVP1 phase machine, its variations, the decision rules, and the SPB baseline.

A trial is ``setup -> run_mark_cast -> count_and_reveal ->
collect_objections -> decide (-> adjudicate_receipts)``.  ``simulate_bvp1``
strings the phases together; ``run_spb`` runs the plain-paper baseline.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple

from . import agents as ag
from . import events as ev
from . import physical as ph
from .errors import (
    EmptyTally,
    InsufficientBallots,
    InvalidConfig,
    VariantInactive,
    WrongPhase,
)
from .events import EA, PUBLIC, Phase
from .rand import sample_distinct, shuffle

VARIANTS = frozenset({"voting_station", "under_table", "parallel_tally", "receipt_ballots"})
MIN_VOTERS, MAX_VOTERS = 3, 40


@dataclass
class PhysicalParams:
    nominal_weight: float = ph.NOMINAL_WEIGHT
    weight_jitter: float = ph.WEIGHT_JITTER
    scale_tolerance: float = ph.SCALE_TOLERANCE
    pattern_space: int = ph.PATTERN_SPACE
    p_desc: float = ph.P_DESC
    p_conf: float = ph.P_CONF
    stamp_charges: int = ph.STAMP_CHARGES
    visible_disk: bool = True  # secret stamps also print a visible disk
    camera_defeated: bool = False  # polarising filters in the room


@dataclass
class BehaviorParams:
    p_peek: float = 0.0  # a neighbour glimpses the orientation through the cloth
    p_unconcealed: float = 0.0  # voter rotates in the open
    p_camera: float = 0.0  # hidden camera captures stamp and orientation
    p_spb_peek: float = 0.5  # SPB: a neighbour sees the marked ballot
    spb_shuffle: float = 0.5  # SPB: probability the central pile gets mixed
    ballot_draw: bool = False  # voters draw blank ballots from a bag
    audit_m: int = 0  # cut-and-choose sample size before distribution
    strict_rotation: bool = True


@dataclass
class ElectionConfig:
    n: int
    k: int = 2
    extras: int = 2
    variants: frozenset = frozenset()
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    behavior: BehaviorParams = field(default_factory=BehaviorParams)
    detection: ag.DetectionModel = field(default_factory=ag.DetectionModel)

    def __post_init__(self):
        self.variants = frozenset(self.variants)
        self.validate()

    def validate(self):
        if not MIN_VOTERS <= self.n <= MAX_VOTERS:
            raise InvalidConfig(f"n={self.n} outside [{MIN_VOTERS}, {MAX_VOTERS}]")
        if not 2 <= self.k <= ph.MAX_ARITY:
            raise InvalidConfig(f"k={self.k} outside [2, {ph.MAX_ARITY}]: foldable ballots need k < 7")
        if self.extras < 0:
            raise InvalidConfig("extras must be >= 0")
        unknown = self.variants - VARIANTS
        if unknown:
            raise InvalidConfig(f"unknown variants {sorted(unknown)}")
        if {"parallel_tally", "receipt_ballots"} <= self.variants:
            raise InvalidConfig("receipt_ballots already uses the second half of the split ballot")
        if self.behavior.audit_m > self.extras:
            raise InvalidConfig("audit_m must not exceed extras")
        if self.physical.pattern_space < self.n + self.extras:
            raise InvalidConfig("pattern space smaller than the number of stamps")
        for name in ("p_peek", "p_unconcealed", "p_camera", "p_spb_peek", "spb_shuffle"):
            p = getattr(self.behavior, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidConfig(f"behavior.{name}={p} outside [0, 1]")
        for name in ("p_desc", "p_conf"):
            p = getattr(self.physical, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidConfig(f"physical.{name}={p} outside [0, 1]")

    @property
    def layout(self) -> ph.Layout:
        if self.variants & {"parallel_tally", "receipt_ballots"}:
            return ph.Layout.PARALLEL
        return ph.Layout.BINARY if self.k == 2 else ph.Layout.KGON

    @property
    def boxes(self) -> int:
        return 2 if "parallel_tally" in self.variants else 1


@dataclass
class Tally:
    counts: tuple
    ballot_count: int
    spoiled: int = 0

    def __post_init__(self):
        if sum(self.counts) + self.spoiled != self.ballot_count:
            raise ValueError("tally does not add up")


@dataclass(frozen=True)
class Outcome:
    kind: str  # "elected" | "annulled"
    winner: int | None = None
    margin: int = 0
    reason: str | None = None  # objection-threshold | tie | audit-failure
    j: int = 0
    j_valid: int | None = None

    @property
    def elected(self) -> bool:
        return self.kind == "elected"


class AuditReport(NamedTuple):
    drawn: tuple
    defective: tuple
    detection_probability: float

    @property
    def passed(self) -> bool:
        return not self.defective


class Adjudication(NamedTuple):
    j_valid: int
    outcome: Outcome
    valid: dict  # objector -> bool (simulation ground truth)


# -- decision rules ---------------------------------------------------------


def margin_of_victory(counts) -> tuple[int | None, int]:
    """(unique winner or None, top count minus runner-up count)."""
    if not counts:
        raise EmptyTally()
    order = sorted(range(len(counts)), key=lambda c: -counts[c])
    top = counts[order[0]]
    second = counts[order[1]] if len(order) > 1 else 0
    margin = top - second
    return (order[0] if margin > 0 else None), margin


def decide(tally, j: int) -> Outcome:
    counts = tally.counts if isinstance(tally, Tally) else tuple(tally)
    if not counts or sum(counts) == 0:
        raise EmptyTally()
    winner, margin = margin_of_victory(counts)
    if winner is None:
        return Outcome("annulled", None, 0, "tie", j)
    if 2 * j < margin:
        return Outcome("elected", winner, margin, None, j)
    return Outcome("annulled", None, margin, "objection-threshold", j)


def detection_probability(N: int, d: int, m: int) -> float:
    """P(a uniform sample of m out of N items hits at least one of d defective)."""
    if not 0 <= d <= N or not 0 <= m <= N:
        raise ValueError("need 0 <= d, m <= N")
    return 1.0 - comb(N - d, m) / comb(N, m)


# -- state ------------------------------------------------------------------


def _seat(v):
    return v.seat


def validate_roster(config: ElectionConfig, roster):
    if len({v.id for v in roster}) != len(roster):
        raise InvalidConfig("duplicate voter ids")
    if len({v.seat for v in roster}) != len(roster):
        raise InvalidConfig("two voters share a seat")
    for v in roster:
        if v.id < 0:
            raise InvalidConfig(f"voter id {v.id} is reserved")
        if not 0 <= v.preference < config.k or (v.demand is not None and not 0 <= v.demand < config.k):
            raise InvalidConfig(f"voter {v.id}: choice outside [0, {config.k})")


class ElectionState:
    """Everything that exists in the room during one trial.

    ``custody`` maps every ballot serial (printed, cut halves, smuggled)
    to exactly one location string.
    """

    def __init__(self, config: ElectionConfig, roster, strategies=(), rng=None, protocol="BVP1",
                 checked=False):
        self.config = config
        self.roster = sorted(roster, key=_seat)
        self._by_id = {v.id: v for v in roster}
        self.strategies = list(strategies)
        self.rng = rng
        self.protocol = protocol
        self.phase = Phase.SETUP
        self.phases = [Phase.SETUP]
        self.log = ev.EventLog()
        self.ballots: dict[str, ph.Ballot] = {}
        self.custody: dict[str, str] = {}
        self.table: list[str] = []  # unused blank ballots, in print order
        self.bag = ph.Bag()
        self.ballot_bag: ph.Bag | None = None
        self.boxes: list[ph.BallotBoxState] = []
        self.receipts: dict[int, ph.Ballot] = {}
        self.voter_pattern: dict[int, int] = {}
        self.own_serial: dict[int, str] = {}  # voter -> ballot in box 0 they cast
        self.cast_choice: dict[int, int | None] = {}  # decoded at casting time
        self.believed: dict[int, int] = {}
        self.casts_seen: list[int] = []
        self.coercions: dict[int, tuple] = {}
        self.silent: set[int] = set()  # voters who will not object (cooperating targets)
        self.premarked: dict[str, ph.Defect] = {}
        self.premark_targets: list[int] = []
        self.injected: list[str] = []
        self.removed: list[str] = []
        self.replaced: dict[str, str] = {}
        self.revealed: list[list[ph.Ballot]] = []
        self.views: list[tuple] = []
        self.tallies: list[Tally] = []
        self.objections: list[tuple[int, str]] = []
        self.outcome: Outcome | None = None
        self.adjudication: Adjudication | None = None
        self.audit: AuditReport | None = None
        self.used_patterns: set[int] = set()
        self._forged = 0
        self._design = self.design()
        self._nbrs = None
        if not checked:
            validate_roster(config, roster)
        for v in roster:
            if v.demand is not None and v.role in (ag.Role.COERCED, ag.Role.BRIBED):
                self.coercions[v.id] = (v.adversary if v.adversary is not None else ev.OUTSIDER, v.demand)

    # helpers used by strategy arms
    def voter(self, vid) -> ag.VoterProfile:
        return self._by_id[vid]

    @property
    def scale_in_use(self) -> bool:
        return self.protocol == "BVP1"

    @property
    def plain_sight(self) -> bool:
        return self.protocol == "BVP1"

    def design(self) -> ph.BallotDesign:
        layout = self.config.layout if self.protocol == "BVP1" else (
            ph.Layout.BINARY if self.config.k == 2 else ph.Layout.KGON)
        return ph.BallotDesign(self.config.k, layout, self.config.physical.nominal_weight)

    def advance(self, phase: Phase):
        if phase <= self.phase:
            raise WrongPhase(f"{self.phase.name} -> {phase.name}")
        self.phase = phase
        self.phases.append(phase)
        self.log.emit(PUBLIC, ev.PHASE, phase.name)

    def new_ballot(self, serial, rng, printed=True) -> ph.Ballot:
        p = self.config.physical
        w = p.nominal_weight + (2.0 * rng.random() - 1.0) * p.weight_jitter
        b = ph.Ballot(serial, self._design, weight=w, printed=printed)
        self.ballots[serial] = b
        return b

    def fresh_pattern(self, rng) -> int:
        while True:
            x = rng.randrange(self.config.physical.pattern_space * 1000)
            if x not in self.used_patterns:
                self.used_patterns.add(x)
                return x

    def forge_ballot(self, choice, rng, owner) -> ph.Ballot:
        """A ballot smuggled in by an attacker, already marked for ``choice``."""
        self._forged += 1
        b = self.new_ballot(f"X{self._forged:03d}", rng, printed=False)
        self.injected.append(b.serial)
        self.custody[b.serial] = f"attacker:{owner}"
        k = self.config.k
        b.orientation = rng.randrange(k)
        b.folded = self.protocol == "BVP1"
        pattern = self.fresh_pattern(rng) if self.protocol == "BVP1" else ph.PEN
        ink = ph.Ink.INVISIBLE if self.protocol == "BVP1" else ph.Ink.VISIBLE
        cell = (choice + b.orientation) % k
        for h in range(b.design.columns):
            if self.protocol == "BVP1":
                b.marks.append(ph.Mark(cell, ph.Ink.VISIBLE, ph.COMMON_DISK, h))
            b.marks.append(ph.Mark(cell, ink, pattern, h))
        return b

    def cut_forged(self, ballot, owner):
        halves = ph.cut_parallel(ballot)
        self.custody[ballot.serial] = "cut"
        for h in halves:
            self.ballots[h.serial] = h
            self.injected.append(h.serial)
            self.custody[h.serial] = f"attacker:{owner}"
        return halves

    def neighbours(self, voter):
        if self._nbrs is None:
            n = len(self.roster)
            self._nbrs = {
                v.id: frozenset({self.roster[(i - 1) % n].id, self.roster[(i + 1) % n].id} - {v.id})
                for i, v in enumerate(self.roster)
            }
        return self._nbrs[voter.id]

    def premark(self, count, actor):
        if count > len(self.table):
            raise InsufficientBallots(f"cannot premark {count} of {len(self.table)} ballots")
        for i, serial in enumerate(self.table[:count]):
            d = ph.Defect("premark", i, actor)
            self.ballots[serial].defects.append(d)
            self.premarked[serial] = d

    def replace_ballot(self, victim, choice, rng) -> bool:
        """Swap one ballot in box 0 for a forged one before the reveal."""
        box = self.boxes[0]
        if not box.contents:
            return False
        if victim is None:
            idx = rng.randrange(len(box.contents))
        else:
            serial = self.own_serial.get(victim)
            idx = next((i for i, b in enumerate(box.contents) if b.serial == serial), None)
            if idx is None:
                return False
        old = box.contents[idx]
        new = self.forge_ballot(choice, rng, owner=EA)
        if old.half is not None:
            new = self.cut_forged(new, EA)[old.half]
        box.contents[idx] = new
        self.custody[old.serial] = "removed"
        self.custody[new.serial] = f"box:{box.label}"
        self.removed.append(old.serial)
        self.replaced[old.serial] = new.serial
        return True

    def add_objection(self, voter, claim):
        if all(v != voter for v, _ in self.objections):
            self.objections.append((voter, claim))
            self.log.emit(PUBLIC, ev.OBJECTION, voter, claim)

    def objectors(self) -> list[int]:
        return [v for v, _ in self.objections]

    @property
    def tally(self) -> Tally | None:
        return self.tallies[0] if self.tallies else None

    def fire(self, hook, rng, turn=None, voter=None):
        found = []
        for s in self.strategies:
            if ag.HOOK[s.kind] != hook:
                continue
            if hook == "turn" and s.turn_owner != voter:
                continue
            found.extend(ag.apply_strategy(s, self, rng, turn))
        return found

    def check_conservation(self):
        """Every printed sheet sits in exactly one place (halves count for their parent)."""
        where = Counter()
        for box in self.boxes:
            for b in box.contents:
                where[b.serial] += 1
                if not self.custody.get(b.serial, "").startswith(("box:", "revealed:")):
                    raise AssertionError(f"{b.serial} in a box but custody says {self.custody.get(b.serial)}")
        for serial, n in where.items():
            if n > 1:
                raise AssertionError(f"{serial} in {n} places")
        for serial, b in self.ballots.items():
            if serial not in self.custody:
                raise AssertionError(f"{serial} has no custody")
            if self.custody[serial] == "cut":
                for h in "ab":
                    if serial + h not in self.custody:
                        raise AssertionError(f"{serial} cut but half {h} missing")
        return True

    def ledger(self) -> Counter:
        """Printed sheets by final location class."""
        out = Counter()
        for serial, b in self.ballots.items():
            if not b.printed or b.half is not None:
                continue
            loc = self.custody[serial]
            if loc == "cut":
                locs = {self.custody[serial + "a"].split(":")[0], self.custody[serial + "b"].split(":")[0]}
                loc = "removed" if "removed" in locs else sorted(locs)[-1]
            out[loc.split(":")[0]] += 1
        return out


# -- BVP1 phases ------------------------------------------------------------


SERIALS = tuple(f"B{i:03d}" for i in range(MAX_VOTERS + 1000))


def _print_ballots(state, total, rng):
    """Print ``total`` blank ballots onto the table (weights jittered)."""
    p = state.config.physical
    nominal, jitter = p.nominal_weight, p.weight_jitter
    design = state._design
    Ballot = ph.Ballot
    random = rng.random
    ballots, custody = state.ballots, state.custody
    serials = SERIALS[:total] if total <= len(SERIALS) else [f"B{i:03d}" for i in range(total)]
    for serial in serials:
        ballots[serial] = Ballot(serial, design, weight=nominal + (2.0 * random() - 1.0) * jitter)
        custody[serial] = "table"
    state.table.extend(serials)


def setup(config: ElectionConfig, roster, strategies=(), rng=None, checked=False) -> ElectionState:
    """Print ballots, bag the stamps, and open the marking phase.

    ``checked=True`` skips roster and strategy validation for callers
    that have already done it (the Monte Carlo runner validates once).
    """
    if not checked:
        if len(roster) != config.n:
            raise InvalidConfig(f"roster has {len(roster)} voters, n={config.n}")
        strategies = ag.attach(strategies, roster, config.variants, "BVP1")
    state = ElectionState(config, roster, strategies, rng, "BVP1", checked=checked)
    log = state.log
    total = config.n + config.extras
    phys = config.physical
    _print_ballots(state, total, rng)
    ids = sample_distinct(rng, phys.pattern_space, total)
    state.used_patterns.update(ids)
    Stamp, Secret = ph.Stamp, ph.VisualSecret
    p_desc, p_conf, disk, charges = phys.p_desc, phys.p_conf, phys.visible_disk, phys.stamp_charges
    log.emit(PUBLIC, ev.STAMPS_INSPECTED, total)
    state.bag.items.extend([Stamp(Secret(pid, p_desc, p_conf), True, disk, charges) for pid in ids])
    state.fire("setup", rng)
    if config.behavior.audit_m:
        state.audit = audit_cut_and_choose(state, config.behavior.audit_m, rng)
    if config.behavior.ballot_draw:
        state.ballot_bag = ph.Bag(state.table)
        state.table = []
    for b in range(config.boxes):
        state.boxes.append(ph.BallotBoxState(
            scale_tolerance=phys.scale_tolerance,
            expected_weight=phys.nominal_weight / (2 if config.layout is ph.Layout.PARALLEL else 1),
            label=b))
        state.casts_seen.append(0)
    state.advance(Phase.MARK_CAST)
    return state


def audit_cut_and_choose(state, m, rng=None) -> AuditReport:
    """Publicly inspect ``m`` blank ballots drawn uniformly from the table."""
    rng = rng or state.rng
    if state.phase is not Phase.SETUP:
        raise WrongPhase("audit happens before distribution")
    N = len(state.table)
    if m > N or N - m < state.config.n:
        raise InsufficientBallots(f"cannot audit {m} of {N} ballots and still serve {state.config.n}")
    picks = rng.sample(range(N), m)
    drawn = tuple(state.table[i] for i in sorted(picks))
    d = sum(1 for s in state.table if state.ballots[s].defects)
    defective = tuple(s for s in drawn if state.ballots[s].defects)
    for s in drawn:
        state.custody[s] = "audited"
    state.table = [s for s in state.table if s not in drawn]
    state.log.emit(PUBLIC, ev.AUDIT, len(drawn), len(defective))
    if defective:
        state.log.emit(PUBLIC, ev.STRATEGY_DETECTED, ag.StrategyKind.CORRUPT_EA_PREMARK.value, EA)
    return AuditReport(drawn, defective, detection_probability(N, d, m))


def _hand_out(state, voter, rng):
    if state.ballot_bag is not None:
        b = ph.draw(state.ballot_bag, rng)
        knows = False
    else:
        b = state.table.pop(0)
        knows = True
    state.custody[b] = f"voter:{voter.id}"
    state.log.emit(PUBLIC, ev.BALLOT_HANDED, voter.id)
    d = state.premarked.get(b)
    if d is not None and knows:
        state.log.emit(frozenset({EA}), ev.DEFECT_SEEN, voter.id, d)
    return state.ballots[b]


def run_mark_cast(state: ElectionState, roster=None, rng=None) -> ElectionState:
    """Marking and casting, one voter at a time in seating order."""
    if state.phase is not Phase.MARK_CAST:
        raise WrongPhase(f"marking during {state.phase.name}")
    rng = rng or state.rng
    cfg = state.config
    log = state.log
    beh = cfg.behavior
    station = "voting_station" in cfg.variants
    parallel = cfg.layout is ph.Layout.PARALLEL
    receipts = "receipt_ballots" in cfg.variants
    camera = beh.p_camera if not cfg.physical.camera_defeated else 0.0
    p_peek = 0.0 if station else beh.p_peek
    common = ph.common_stamp() if parallel else None
    turn_owners = {s.turn_owner for s in state.strategies if ag.HOOK[s.kind] == "turn"}
    p_desc_default = cfg.physical.p_desc

    emit = log.emit
    # Routine public events are appended inline; this loop dominates runtime.
    events = log.events
    push = events.append
    new_event = ev._new_event
    Event = ev.ObservationEvent
    custody = state.custody
    draw = ph.draw
    bag = state.bag
    honest_turn = ag.honest_turn
    imprint = ph.imprint
    decode = ph.decode
    cast = ph.cast
    rotate = ph.rotate
    random = rng.random
    voter_pattern = state.voter_pattern
    believed = state.believed
    cast_choice = state.cast_choice
    own_serial = state.own_serial
    coercions = state.coercions
    box0 = state.boxes[0]
    at_box = [f"box:{i}" for i in range(len(state.boxes))]
    strict = beh.strict_rotation
    p_unconcealed = 0.0 if station else beh.p_unconcealed
    k = cfg.k
    k_STAMP_DRAWN, k_FOLD, k_ROTATE, k_MARK = ev.STAMP_DRAWN, ev.FOLD, ev.ROTATE, ev.MARK_PLACED
    k_CAST = ev.CAST_ORDER
    outsider = frozenset({ev.OUTSIDER})

    table = state.table
    ballots = state.ballots
    premarked = state.premarked
    k_HANDED = ev.BALLOT_HANDED
    state.neighbours(state.roster[0])
    nbrs = state._nbrs
    Mark, VISIBLE, INVISIBLE, DISK = ph.Mark, ph.Ink.VISIBLE, ph.Ink.INVISIBLE, ph.COMMON_DISK

    for voter in roster or state.roster:
        vid = voter.id
        if state.ballot_bag is None and not premarked:
            serial = table.pop(0)
            custody[serial] = f"voter:{vid}"
            push(new_event(Event, (len(events), PUBLIC, k_HANDED, (vid,))))
            ballot = ballots[serial]
        else:
            ballot = _hand_out(state, voter, rng)
        stock = bag.items
        if not stock:
            raise ph.EmptyBag()
        i = int(random() * len(stock))  # ph.draw, inlined
        stock[i], stock[-1] = stock[-1], stock[i]
        stamp = stock.pop()
        push(new_event(Event, (len(events), PUBLIC, k_STAMP_DRAWN, (vid,))))
        pattern = stamp.secret.pattern_id
        voter_pattern[vid] = pattern
        if camera and random() < camera:
            emit(outsider, ev.PATTERN_SEEN, vid, pattern)
        if vid in coercions:
            adversary = coercions[vid][0]
            fidelity = p_desc_default if voter.p_desc is None else voter.p_desc
            if fidelity > 0:
                emit(frozenset({adversary}), ev.DESCRIPTION_RECEIVED, vid, pattern, fidelity)

        if ballot.folded:
            raise ph.AlreadyFolded(ballot.serial)
        ballot.folded = True
        push(new_event(Event, (len(events), PUBLIC, k_FOLD, (vid,))))
        nb = None if station else nbrs[vid]
        concealed = not (p_unconcealed and random() < p_unconcealed)
        turn = honest_turn(voter, ballot, rng, concealed=concealed)
        if vid in turn_owners:
            state.fire("turn", rng, turn, vid)
        if turn.concealed and not ballot.marks:
            ballot.orientation = (ballot.orientation + turn.rotation) % k  # ph.rotate, quiet case
        else:
            rotate(ballot, turn.rotation, turn.concealed, log=log, actor=vid, observers=nb or (),
                   strict=strict)
        push(new_event(Event, (len(events), PUBLIC, k_ROTATE, (vid,))))
        if p_peek and random() < p_peek:
            emit(nb, ev.PEEK_ORIENTATION, vid, ballot.orientation)
        if camera and random() < camera:
            emit(outsider, ev.LABEL_LEAK, vid, ballot.orientation)

        if turn.swap_in is not None:
            custody[ballot.serial] = "removed"
            state.removed.append(ballot.serial)
            ballot = turn.swap_in
            custody[ballot.serial] = f"voter:{vid}"
            state.silent.add(vid)
        fresh = False
        if turn.skip_imprint:
            cell = next(m.cell for m in ballot.marks if m.is_vote)
        else:
            cell = turn.cell
            if parallel:
                for h in (0, 1):
                    imprint(ballot, cell, common, half=h)
                for h in (0, 1):
                    imprint(ballot, cell, stamp, half=h, feint=turn.feint_half == h)
            elif stamp.charges > 0 and 0 <= cell < k and not ballot.marks:
                # ph.imprint onto a clean single-column ballot, inlined
                if stamp.common_mark:
                    ballot.marks.append(Mark(cell, VISIBLE, DISK, 0))
                ballot.marks.append(Mark(cell, INVISIBLE, pattern, 0))
                stamp.charges -= 1
                fresh = True
            else:
                imprint(ballot, cell, stamp)
        push(new_event(Event, (len(events), PUBLIC, k_MARK, (vid, cell, k))))
        if turn.defect is not None:
            ballot.defects.append(turn.defect)
            scope = {vid} | ({turn.informed} if turn.informed is not None else set())
            emit(frozenset(scope), ev.DEFECT_SEEN, vid, turn.defect)
        believed[vid] = turn.choice
        # a clean ballot with one stamp decodes without a scan
        cast_choice[vid] = (cell - ballot.orientation) % k if fresh else decode(ballot)

        if not parallel and not turn.extra_ballots:
            # Single ballot into box 0: ph.cast inlined.
            position = len(box0.contents)
            box0.contents.append(ballot)
            if box0.on_scale:
                readings = box0.scale_readings
                readings.append((readings[-1] if readings else 0.0) + ballot.weight)
                if abs(ballot.weight - box0.expected_weight) > box0.scale_tolerance:
                    emit(PUBLIC, ev.MULTIPLE_CAST, vid, 0, ballot.weight)
            push(new_event(Event, (len(events), PUBLIC, k_CAST, (vid, position, 0))))
            state.casts_seen[0] += 1
            custody[ballot.serial] = "box:0"
            own_serial[vid] = ballot.serial
            continue

        if parallel:
            try:
                a, b = ph.cut_parallel(ballot, log=log, actor=vid)
            except ph.ColumnsMismatch:
                custody[ballot.serial] = "spoiled"
                continue
            custody[ballot.serial] = "cut"
            for half in (a, b):
                state.ballots[half.serial] = half
            if receipts:
                to_cast = [(0, a)]
                state.receipts[vid] = b
                custody[b.serial] = f"receipt:{vid}"
            else:
                to_cast = [(0, a), (1, b)]
        else:
            to_cast = [(0, ballot)]

        extra_pieces = [state.cut_forged(x, vid) if parallel else (x,) for x in turn.extra_ballots]
        for box_i, piece in to_cast:
            extras = [x[box_i] for x in extra_pieces]
            cast(state.boxes[box_i], [piece, *extras], log=log, actor=vid)
            state.casts_seen[box_i] += 1
            for x in (piece, *extras):
                custody[x.serial] = at_box[box_i]
            if box_i == 0:
                own_serial[vid] = piece.serial

    if state.bag.items:
        log.emit(PUBLIC, ev.STAMPS_VOIDED, len(state.bag.items))
        state.bag.items.clear()
    state.advance(Phase.COUNT_VERIFY)
    return state


def count_and_reveal(state: ElectionState, rng=None):
    """Shake, empty, unfold, spray, and tally every box.

    Returns (tally of box 0, revealed ballots of box 0).
    """
    if state.phase is not Phase.COUNT_VERIFY:
        raise WrongPhase(f"counting during {state.phase.name}")
    if state.tallies:
        raise WrongPhase("ballots already counted")
    rng = rng or state.rng
    log = state.log
    k = state.config.k
    state.fire("count", rng)
    custody = state.custody
    read = ph.read_revealed
    View = ev.RevealedView
    new_view = tuple.__new__
    for box in state.boxes:
        pool = box.contents
        shuffle(rng, pool)
        log.emit(PUBLIC, ev.SHUFFLE, box.label)
        where = f"revealed:{box.label}"
        for b in pool:
            b.folded = False
            custody[b.serial] = where
        ph.reveal_ink(pool, state.phase)
        counts = [0] * k
        spoiled = 0
        views = []
        for i, b in enumerate(pool):
            c, pats = read(b)
            if c is None:
                spoiled += 1
            else:
                counts[c] += 1
            views.append(new_view(View, (i, pats, c, tuple(b.defects))))
        views = tuple(views)
        tally = Tally(tuple(counts), len(pool), spoiled)
        state.revealed.append(list(pool))
        state.views.append(views)
        state.tallies.append(tally)
        log.emit(PUBLIC, ev.BALLOTS_REVEALED, box.label, views)
        log.emit(PUBLIC, ev.TALLY_PUBLISHED, box.label, tally.counts, spoiled, len(pool))
        if len(pool) != state.casts_seen[box.label]:
            log.emit(PUBLIC, ev.COUNT_MISMATCH, box.label, len(pool), state.casts_seen[box.label])
    if len(state.tallies) > 1 and state.tallies[0] != state.tallies[1]:
        log.emit(PUBLIC, ev.PARALLEL_MISMATCH, state.tallies[0].counts, state.tallies[1].counts)
    return state.tallies[0], state.revealed[0]


def _witness(state, exclude):
    taken = set(state.objectors()) | set(exclude)
    for v in state.roster:
        if v.role is ag.Role.HONEST and v.id not in taken:
            return v.id
    return None


def _incident(e):
    if e.kind == ev.STRATEGY_DETECTED:
        return e.data[1]
    if e.kind in (ev.MULTIPLE_CAST, ev.COLUMNS_MISMATCH):
        return e.data[0]
    return None  # ballot-count discrepancies have no named culprit


def _witness_objections(state):
    # One honest witness objects per culprit (or once for count discrepancies).
    seen = set()
    for e in list(state.log.events):
        if e.kind not in ev.INTEGRITY_KINDS:
            continue
        who = _incident(e)
        if who in seen:
            continue
        seen.add(who)
        w = _witness(state, [] if who is None else [who])
        if w is not None:
            state.add_objection(w, f"witnessed:{e.kind}")


def collect_objections(state: ElectionState, roster=None, rng=None):
    """Every voter looks for their secret; public detections add a witness objection."""
    if not state.tallies:
        raise WrongPhase("objections come after the tally is published")
    rng = rng or state.rng
    p_conf = state.config.physical.p_conf
    pools = [ag.index_pool(p) for p in state.views]
    for v in roster or state.roster:
        if v.id not in state.believed:
            continue
        claim = ag.verification_behavior(
            v, state.believed[v.id], pools, state.voter_pattern[v.id], rng,
            p_conf=p_conf, silent=v.id in state.silent)
        if claim is not None:
            state.add_objection(v.id, claim)
    state.fire("verify", rng)
    _witness_objections(state)
    return list(state.objections)


def adjudicate_receipts(state: ElectionState, objections=None, rng=None) -> Adjudication:
    """Reveal the objectors' receipt halves and count the valid objections."""
    if "receipt_ballots" not in state.config.variants:
        raise VariantInactive("receipt_ballots")
    rng = rng or state.rng
    objections = state.objections if objections is None else objections
    objectors = sorted({v for v, _ in objections})
    j = len(objectors)
    tally = state.tallies[0]
    winner, margin = margin_of_victory(tally.counts)
    if 2 * j < margin:
        return Adjudication(0, decide(tally, j), {})
    if state.phase < Phase.ADJUDICATE:
        state.advance(Phase.ADJUDICATE)
    held = [state.receipts[v] for v in objectors if v in state.receipts]
    rng.shuffle(held)
    ph.reveal_ink(held, Phase.COUNT_VERIFY)
    cast_keys = set()
    for b in state.revealed[0]:
        c = ph.decode(b)
        for p in ph.patterns(b):
            cast_keys.add((p, c))
    owner = {state.receipts[v].serial: v for v in objectors if v in state.receipts}
    valid = {v: True for v in objectors}
    keys = []
    for r in held:
        c = ph.decode(r)
        pats = ph.patterns(r)
        key = (pats[0] if len(pats) == 1 else None, c)
        keys.append(key)
        valid[owner[r.serial]] = key not in cast_keys
        state.custody[r.serial] = "revealed:receipts"
    j_valid = sum(valid.values())
    state.log.emit(PUBLIC, ev.RECEIPT_REVEALED, tuple(objectors), tuple(sorted(keys, key=repr)))
    state.log.emit(PUBLIC, ev.ADJUDICATION, j, j_valid)
    if winner is not None and 2 * j_valid < margin:
        out = Outcome("elected", winner, margin, None, j, j_valid)
    elif winner is None:
        out = Outcome("annulled", None, 0, "tie", j, j_valid)
    else:
        out = Outcome("annulled", None, margin, "objection-threshold", j, j_valid)
    state.adjudication = Adjudication(j_valid, out, valid)
    return state.adjudication


def _finish(state, outcome):
    state.outcome = outcome
    if state.phase < Phase.DONE:
        state.advance(Phase.DONE)
    o = outcome
    state.log.emit(PUBLIC, ev.OUTCOME, o.kind, o.winner, o.margin, o.reason, o.j, o.j_valid)
    return state


def simulate_bvp1(config, roster, strategies=(), rng=None, checked=False) -> ElectionState:
    state = setup(config, roster, strategies, rng, checked)
    if state.audit is not None and not state.audit.passed:
        return _finish(state, Outcome("annulled", reason="audit-failure"))
    run_mark_cast(state)
    tally, _ = count_and_reveal(state)
    collect_objections(state)
    j = len(state.objections)
    if tally.ballot_count == tally.spoiled:
        return _finish(state, Outcome("annulled", reason="tie", j=j))
    outcome = decide(tally, j)
    if "receipt_ballots" in config.variants and outcome.reason == "objection-threshold":
        outcome = adjudicate_receipts(state).outcome
    return _finish(state, outcome)


# -- SPB baseline -----------------------------------------------------------


def simulate_spb(config, roster, strategies=(), rng=None, checked=False) -> ElectionState:
    """Plain paper ballots marked at the seats and tossed into the middle."""
    if not checked:
        if len(roster) != config.n:
            raise InvalidConfig(f"roster has {len(roster)} voters, n={config.n}")
        strategies = ag.attach(strategies, roster, config.variants, "SPB")
    state = ElectionState(config, roster, strategies, rng, "SPB", checked=checked)
    log = state.log
    beh = config.behavior
    k = config.k
    _print_ballots(state, config.n + config.extras, rng)
    state.fire("setup", rng)
    state.boxes.append(ph.BallotBoxState(on_scale=False, label=0))
    state.casts_seen.append(0)
    state.advance(Phase.MARK_CAST)
    pile = state.boxes[0]
    turn_owners = {s.turn_owner for s in state.strategies if ag.HOOK[s.kind] == "turn"}
    camera = beh.p_camera if not config.physical.camera_defeated else 0.0
    for voter in state.roster:
        vid = voter.id
        ballot = _hand_out(state, voter, rng)
        turn = ag.TurnActions(vid, voter.vote, 0, cell=voter.vote)
        if vid in turn_owners:
            state.fire("turn", rng, turn, vid)
        if turn.swap_in is not None:
            state.custody[ballot.serial] = "removed"
            state.removed.append(ballot.serial)
            ballot = turn.swap_in
            state.silent.add(vid)
        else:
            ph.pen_mark(ballot, turn.cell)
        cell = next(m.cell for m in ballot.marks)
        for w in sorted(state.neighbours(voter)):
            if rng.random() < beh.p_spb_peek:
                log.emit(frozenset({w}), ev.LABEL_LEAK, vid, ballot.orientation)
                log.emit(frozenset({w}), ev.MARK_PLACED, vid, cell, k)
        if camera and rng.random() < camera:
            log.emit(frozenset({ev.OUTSIDER}), ev.LABEL_LEAK, vid, ballot.orientation)
            log.emit(frozenset({ev.OUTSIDER}), ev.MARK_PLACED, vid, cell, k)
        if turn.defect is not None:
            ballot.defects.append(turn.defect)
            scope = {vid} | ({turn.informed} if turn.informed is not None else set())
            log.emit(frozenset(scope), ev.DEFECT_SEEN, vid, turn.defect)
        state.believed[vid] = turn.choice
        state.cast_choice[vid] = ph.decode(ballot)
        ballot.folded = True
        ph.cast(pile, [ballot, *turn.extra_ballots], log=log, actor=vid)
        state.casts_seen[0] += 1
        for x in (ballot, *turn.extra_ballots):
            state.custody[x.serial] = "box:0"
        state.own_serial[vid] = ballot.serial
    state.advance(Phase.COUNT_VERIFY)

    state.fire("count", rng)
    if rng.random() < beh.spb_shuffle:
        shuffle(rng, pile.contents)
        log.emit(PUBLIC, ev.SHUFFLE, 0)
    else:
        log.emit(PUBLIC, ev.PILE_ORDER_KEPT)
    counts = [0] * k
    spoiled = 0
    views = []
    for i, b in enumerate(pile.contents):
        b.folded = False
        state.custody[b.serial] = "revealed:0"
        c = ph.decode(b)
        if c is None:
            spoiled += 1
        else:
            counts[c] += 1
        views.append(ev.RevealedView(i, (), c, tuple(b.defects)))
    tally = Tally(tuple(counts), len(pile.contents), spoiled)
    state.revealed.append(list(pile.contents))
    state.views.append(tuple(views))
    state.tallies.append(tally)
    log.emit(PUBLIC, ev.BALLOTS_REVEALED, 0, tuple(views))
    log.emit(PUBLIC, ev.TALLY_PUBLISHED, 0, tally.counts, spoiled, len(pile.contents))
    if len(pile.contents) != state.casts_seen[0]:
        log.emit(PUBLIC, ev.COUNT_MISMATCH, 0, len(pile.contents), state.casts_seen[0])

    # No voter-verification step: only explicit challenges stop the result.
    state.fire("verify", rng)
    _witness_objections(state)
    j = len(state.objections)
    if j:
        log.emit(PUBLIC, ev.CHALLENGE, j)
    if tally.ballot_count == tally.spoiled:
        return _finish(state, Outcome("annulled", reason="tie", j=j))
    winner, margin = margin_of_victory(tally.counts)
    if winner is None:
        out = Outcome("annulled", None, 0, "tie", j)
    elif j:
        out = Outcome("annulled", None, margin, "objection-threshold", j)
    else:
        out = Outcome("elected", winner, margin, None, 0)
    return _finish(state, out)


def run_spb(config, roster, strategies=(), rng=None):
    state = simulate_spb(config, roster, strategies, rng)
    return state.tally, state.outcome, state.log
