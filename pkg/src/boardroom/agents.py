"""Voter behaviour and the adversary strategy catalogue.

Strategies are attached to a trial before it starts and fire at a fixed
hook (setup, a voter's turn, counting, verification).  Every strategy
kind has exactly one arm in ``apply_strategy``; a detection event is
raised with the strategy's configured probability.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import events as ev
from . import physical as ph
from .errors import StrategyPreconditionFailed
from .rand import below


class Role(str, enum.Enum):
    HONEST = "honest"
    COERCED = "coerced"
    BRIBED = "bribed"
    MALICIOUS = "malicious"


@dataclass
class VoterProfile:
    id: int
    seat: int
    preference: int
    role: Role = Role.HONEST
    demand: int | None = None  # coerced / bribed
    adversary: int | None = None  # coerced / bribed
    strategy: str | None = None  # malicious
    p_forget: float = 0.0
    p_orient: float = 0.0
    p_desc: float | None = None  # None: use the visual secret's p_desc

    def __post_init__(self):
        self.role = Role(self.role)
        for name in ("p_forget", "p_orient", "p_desc"):
            p = getattr(self, name)
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError(f"voter {self.id}: {name}={p} outside [0, 1]")

    @property
    def vote(self) -> int:
        """Choice this voter stamps; bribed voters sell theirs."""
        if self.role is Role.BRIBED and self.demand is not None:
            return self.demand
        return self.preference

    intent = vote  # ground truth used for "cast as intended"


class StrategyKind(str, enum.Enum):
    CHAIN_VOTING = "ChainVoting"
    DOUBLE_CAST = "DoubleCast"
    EA_REPLACEMENT = "EAReplacement"
    IDENTIFYING_MARK = "IdentifyingMark"
    CORRUPT_EA_PREMARK = "CorruptEAPremark"
    FALSE_OBJECTION = "FalseObjection"
    COERCION_DEMAND = "CoercionDemand"
    FEINT_STAMP = "FeintStamp"


HOOK = {
    StrategyKind.CORRUPT_EA_PREMARK: "setup",
    StrategyKind.COERCION_DEMAND: "setup",
    StrategyKind.CHAIN_VOTING: "turn",
    StrategyKind.DOUBLE_CAST: "turn",
    StrategyKind.IDENTIFYING_MARK: "turn",
    StrategyKind.FEINT_STAMP: "turn",
    StrategyKind.EA_REPLACEMENT: "count",
    StrategyKind.FALSE_OBJECTION: "verify",
}

EA_STRATEGIES = frozenset({StrategyKind.EA_REPLACEMENT, StrategyKind.CORRUPT_EA_PREMARK})


@dataclass
class AdversaryStrategy:
    kind: StrategyKind
    actor: int = ev.EA
    target: int | None = None  # chain-voting / coercion target, replacement victim
    choice: int | None = None  # demanded or substituted choice
    defect: str = "pinhole"
    count: int = 1  # premarked ballots
    half: int = 0  # column left blank by a feint
    p_detect: float | None = None  # overrides the detection model

    def __post_init__(self):
        try:
            self.kind = StrategyKind(self.kind)
        except ValueError:
            raise StrategyPreconditionFailed(f"unknown strategy {self.kind!r}") from None

    @property
    def turn_owner(self) -> int | None:
        """Voter whose turn triggers a turn-hooked strategy."""
        if self.kind is StrategyKind.CHAIN_VOTING:
            return self.target
        return self.actor


@dataclass
class DetectionModel:
    chain_voting: float = 0.7
    double_cast_watch: float = 0.3  # only used without a scale
    ea_replacement_plain_sight: float = 0.5
    ea_replacement_hidden: float = 0.1
    feint_mitigated: float = 0.6
    feint_unmitigated: float = 0.1
    identifying_mark: float = 0.1
    premark_inspection: float = 0.0
    coercion: float = 0.0
    false_objection: float = 0.0
    under_table_factor: float = 0.5

    def __post_init__(self):
        for name, p in vars(self).items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"detection.{name}={p} outside [0, 1]")

    def p_detect(self, kind, *, plain_sight=True, under_table=False, mitigated=True, scale=True):
        kind = StrategyKind(kind)
        if kind is StrategyKind.CHAIN_VOTING:
            p = self.chain_voting
            return p * self.under_table_factor if under_table else p
        if kind is StrategyKind.DOUBLE_CAST:
            return 1.0 if scale else self.double_cast_watch
        if kind is StrategyKind.EA_REPLACEMENT:
            return self.ea_replacement_plain_sight if plain_sight else self.ea_replacement_hidden
        if kind is StrategyKind.FEINT_STAMP:
            return self.feint_mitigated if mitigated else self.feint_unmitigated
        if kind is StrategyKind.IDENTIFYING_MARK:
            return self.identifying_mark
        if kind is StrategyKind.CORRUPT_EA_PREMARK:
            return self.premark_inspection
        if kind is StrategyKind.COERCION_DEMAND:
            return self.coercion
        return self.false_objection


def attach(strategies, roster, variants=frozenset(), protocol="BVP1"):
    """Check every strategy's preconditions before a trial starts."""
    ids = {v.id for v in roster}
    for s in strategies:
        if s.kind in EA_STRATEGIES:
            if s.actor != ev.EA:
                raise StrategyPreconditionFailed(f"{s.kind.value} requires the EA as actor")
        elif s.kind is not StrategyKind.COERCION_DEMAND and s.actor not in ids:
            raise StrategyPreconditionFailed(f"{s.kind.value}: actor {s.actor} not in roster")
        if s.kind in (StrategyKind.CHAIN_VOTING, StrategyKind.COERCION_DEMAND):
            if s.target not in ids or s.target == s.actor:
                raise StrategyPreconditionFailed(f"{s.kind.value}: bad target {s.target}")
            if s.choice is None:
                raise StrategyPreconditionFailed(f"{s.kind.value}: demanded choice missing")
        if s.kind is StrategyKind.EA_REPLACEMENT and s.choice is None:
            raise StrategyPreconditionFailed("EAReplacement: substitute choice missing")
        if s.kind is StrategyKind.EA_REPLACEMENT and s.target is not None and s.target not in ids:
            raise StrategyPreconditionFailed(f"EAReplacement: victim {s.target} not in roster")
        if s.kind is StrategyKind.FEINT_STAMP:
            if protocol != "BVP1" or not variants & {"parallel_tally", "receipt_ballots"}:
                raise StrategyPreconditionFailed("FeintStamp needs a two-column ballot variant")
        if s.kind is StrategyKind.CORRUPT_EA_PREMARK and s.count < 0:
            raise StrategyPreconditionFailed("CorruptEAPremark: negative count")
    return list(strategies)


# -- per-turn behaviour -----------------------------------------------------


class TurnActions:
    """What a voter does on their turn, after strategies have had their say.

    Strategy fields default at class level and are only set on the
    instance when a strategy touches them.
    """

    swap_in = None  # pre-marked ballot handed over in a chain-voting swap
    skip_imprint = False
    feint_half = None
    extra_ballots = ()
    defect = None
    informed = None  # agent told about the identifying mark

    def __init__(self, voter, choice, rotation, concealed=True, cell=0, flipped=False):
        self.voter = voter
        self.choice = choice  # what the voter means to vote
        self.rotation = rotation
        self.concealed = concealed
        self.cell = cell
        self.flipped = flipped

    def __repr__(self):
        return f"TurnActions({vars(self)})"


def honest_turn(voter: VoterProfile, ballot: ph.Ballot, rng, *, rotation=None, concealed=True):
    """The canonical fold / rotate / stamp sequence for one voter.

    With probability ``p_orient`` the voter loses track of the ballot's
    orientation, believes it is a uniformly chosen wrong value, and so
    stamps the wrong cell.
    """
    k = ballot.design.k
    r = int(rng.random() * k) if rotation is None else rotation
    orientation = (ballot.orientation + r) % k
    believed = orientation
    flipped = False
    if voter.p_orient and rng.random() < voter.p_orient:
        believed = (orientation + 1 + below(rng, k - 1)) % k
        flipped = True
    vote = voter.vote
    return TurnActions(voter.id, vote, r, concealed, (vote + believed) % k, flipped)


# -- strategy arms ----------------------------------------------------------


def _detect(strategy, p, state, rng):
    if strategy.p_detect is not None:
        p = strategy.p_detect
    if p >= 1.0 or (p > 0.0 and rng.random() < p):
        return [state.log.emit(ev.PUBLIC, ev.STRATEGY_DETECTED, strategy.kind.value, strategy.actor)]
    return []


def _chain_voting(s, state, rng, turn):
    # The adversary pre-stamps a smuggled ballot for the demanded choice and
    # trades it for the target's blank during the concealed rotation.
    forged = state.forge_ballot(s.choice, rng, owner=s.actor)
    turn.swap_in = forged
    turn.skip_imprint = True
    p = state.config.detection.p_detect(s.kind, under_table="under_table" in state.config.variants)
    return _detect(s, p, state, rng)


def _double_cast(s, state, rng, turn):
    voter = state.voter(s.actor)
    turn.extra_ballots = (*turn.extra_ballots, state.forge_ballot(voter.vote, rng, owner=s.actor))
    if state.scale_in_use:
        return []  # the scale does the detecting
    return _detect(s, state.config.detection.double_cast_watch, state, rng)


def _identifying_mark(s, state, rng, turn):
    turn.defect = ph.Defect(s.defect, rng.randrange(8), s.actor)
    turn.informed = s.target if s.target is not None else state.coercions.get(s.actor, (None,))[0]
    return _detect(s, state.config.detection.identifying_mark, state, rng)


def _feint(s, state, rng, turn):
    turn.feint_half = s.half
    p = state.config.detection.p_detect(s.kind, mitigated=state.config.physical.visible_disk)
    return _detect(s, p, state, rng)


def _premark(s, state, rng, turn=None):
    state.premark(s.count, s.actor)
    return _detect(s, state.config.detection.premark_inspection, state, rng)


def _coercion(s, state, rng, turn=None):
    state.coercions[s.target] = (s.actor, s.choice)
    return _detect(s, state.config.detection.coercion, state, rng)


def _replacement(s, state, rng, turn=None):
    if not state.replace_ballot(s.target, s.choice, rng):
        return []
    p = state.config.detection.p_detect(s.kind, plain_sight=state.plain_sight)
    return _detect(s, p, state, rng)


def _false_objection(s, state, rng, turn=None):
    state.add_objection(s.actor, "false-claim")
    return _detect(s, state.config.detection.false_objection, state, rng)


_ARMS = {
    StrategyKind.CHAIN_VOTING: _chain_voting,
    StrategyKind.DOUBLE_CAST: _double_cast,
    StrategyKind.EA_REPLACEMENT: _replacement,
    StrategyKind.IDENTIFYING_MARK: _identifying_mark,
    StrategyKind.CORRUPT_EA_PREMARK: _premark,
    StrategyKind.FALSE_OBJECTION: _false_objection,
    StrategyKind.COERCION_DEMAND: _coercion,
    StrategyKind.FEINT_STAMP: _feint,
}


def apply_strategy(strategy, state, rng, turn=None):
    """Run one strategy against ``state``; returns its detection events."""
    hook = HOOK[strategy.kind]
    if hook == "turn" and turn is None:
        raise StrategyPreconditionFailed(f"{strategy.kind.value} fires during a voter's turn")
    return _ARMS[strategy.kind](strategy, state, rng, turn)


# -- post-reveal behaviour --------------------------------------------------


def coerced_response(voter, pool, demand, rng, own_position=None):
    """Ballot a coerced voter points to when asked how they voted.

    ``pool`` is the revealed pool as a sequence of RevealedView.  Returns
    the claimed position, or None when no ballot for ``demand`` exists
    and the voter cannot equivocate.
    """
    if own_position is not None and pool[own_position].choice == demand:
        return own_position
    cover = [b.position for b in pool if b.choice == demand]
    if not cover:
        return None
    return cover[rng.randrange(len(cover))]


def index_pool(pool) -> dict:
    """pattern id -> decoded choices of the revealed ballots bearing it."""
    idx = {}
    for b in pool:
        for p in b.patterns:
            idx.setdefault(p, []).append(b.choice)
    return idx


def verification_behavior(voter, believed, pools, own_pattern, rng, p_conf=0.0, silent=False):
    """Objection claim raised by ``voter`` after the reveal, or None.

    ``pools`` holds one revealed pool per ballot box, either as a sequence
    of RevealedView or already passed through ``index_pool``; the voter
    looks for ``own_pattern`` in every one.
    """
    if voter.role is Role.MALICIOUS and voter.strategy == StrategyKind.FALSE_OBJECTION.value:
        return "false-claim"
    if silent:
        return None
    if voter.p_forget and rng.random() < voter.p_forget:
        return "pattern-missing"
    claim = None
    for pool in pools:
        idx = pool if isinstance(pool, dict) else index_pool(pool)
        found = idx.get(own_pattern)
        if not found:
            claim = claim or "pattern-missing"
        elif any(c != believed for c in found):
            claim = claim or "vote-altered"
    if claim is not None and p_conf and rng.random() < p_conf:
        return None  # mistook another ballot for their own
    return claim
