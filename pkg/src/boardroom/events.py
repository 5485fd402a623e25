"""Observation events, the event log, and the protocol phase enum.

Every manipulation in a trial appends one ``ObservationEvent`` to the
trial's log.  An event's ``scope`` is either ``PUBLIC`` (everyone in the
room sees it) or a frozenset of agent ids.  The log is append-only and
its record order is the golden-file order: ``(t, scope, kind, data)``
with ``t`` equal to the event's index in the log.
"""

from __future__ import annotations

import enum
import json
from typing import Any, NamedTuple

PUBLIC = None

EA = -1  # agent id of the election authority
OUTSIDER = -2  # camera operator / external coercer with no seat


class Phase(enum.IntEnum):
    SETUP = 0
    MARK_CAST = 1
    COUNT_VERIFY = 2
    ADJUDICATE = 3
    DONE = 4


# Knowledge-bearing event kinds.
CAST_ORDER = "CastOrder"  # (voter, position, box)
PEEK_ORIENTATION = "PeekOrientation"  # (voter, orientation)
PATTERN_SEEN = "PatternSeen"  # (voter, pattern_id)
DEFECT_SEEN = "DefectSeen"  # (voter, defect)
DESCRIPTION_RECEIVED = "DescriptionReceived"  # (voter, pattern_id, fidelity)
RECEIPT_REVEALED = "ReceiptRevealed"  # (objectors, ((pattern_id, choice), ...))
LABEL_LEAK = "LabelLeak"  # (voter, orientation)
MARK_PLACED = "MarkPlaced"  # (voter, cell, k): a stamp pressed in plain sight
BALLOTS_REVEALED = "BallotsRevealed"  # (box, (RevealedView, ...))
PILE_ORDER_KEPT = "PileOrderKept"  # ()

KNOWLEDGE_KINDS = frozenset({
    CAST_ORDER, PEEK_ORIENTATION, PATTERN_SEEN, DEFECT_SEEN, DESCRIPTION_RECEIVED,
    RECEIPT_REVEALED, LABEL_LEAK, MARK_PLACED, BALLOTS_REVEALED, PILE_ORDER_KEPT,
})

# Procedural and integrity events.
PHASE = "Phase"
STAMPS_INSPECTED = "StampsInspected"
BALLOT_HANDED = "BallotHanded"
STAMP_DRAWN = "StampDrawn"
FOLD = "Fold"
ROTATE = "Rotate"
MULTIPLE_CAST = "MultipleCastDetected"
COLUMNS_MISMATCH = "ColumnsMismatch"
STRATEGY_DETECTED = "StrategyDetected"  # (kind, actor)
SHUFFLE = "Shuffle"
TALLY_PUBLISHED = "TallyPublished"  # (box, counts, spoiled, ballot_count)
COUNT_MISMATCH = "CountMismatch"  # (box, ballots_found, casts_seen)
PARALLEL_MISMATCH = "ParallelTallyMismatch"
STAMPS_VOIDED = "StampsVoided"
OBJECTION = "Objection"  # (voter, claim)
ADJUDICATION = "Adjudication"  # (j, j_valid)
AUDIT = "Audit"  # (drawn, defects_found)
CHALLENGE = "Challenge"
OUTCOME = "Outcome"

INTEGRITY_KINDS = frozenset(
    {MULTIPLE_CAST, COLUMNS_MISMATCH, STRATEGY_DETECTED, COUNT_MISMATCH, PARALLEL_MISMATCH}
)


class RevealedView(NamedTuple):
    """What anyone at the table sees of one revealed ballot."""

    position: int
    patterns: tuple  # secret pattern ids visible after the revealing spray
    choice: int | None  # None for spoiled ballots
    defects: tuple


class ObservationEvent(NamedTuple):
    t: int
    scope: frozenset | None
    kind: str
    data: tuple

    def visible_to(self, agent: int) -> bool:
        return self.scope is None or agent in self.scope


_new_event = tuple.__new__


class EventLog:
    def __init__(self):
        self.events: list[ObservationEvent] = []
        self.private = 0  # number of events with a restricted scope
        self.flagged: list[ObservationEvent] = []  # integrity events, in log order

    def emit(self, scope, kind, *data):
        """Append an event.  Routine public events may also be appended
        straight onto ``events``; integrity and scoped events must come
        through here so ``private`` and ``flagged`` stay accurate."""
        events = self.events
        e = _new_event(ObservationEvent, (len(events), scope, kind, data))
        events.append(e)
        if scope is not None:
            self.private += 1
        if kind in INTEGRITY_KINDS:
            self.flagged.append(e)
        return e

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_kind(self, kind):
        return [e for e in self.events if e.kind == kind]

    def to_records(self) -> list[list[Any]]:
        """Stable JSON-ready records: ``[t, scope, kind, data]``."""
        return [
            [e.t, "public" if e.scope is None else sorted(e.scope), e.kind, _plain(e.data)]
            for e in self.events
        ]

    def dumps(self) -> str:
        return "\n".join(json.dumps(r, separators=(",", ":")) for r in self.to_records()) + "\n"


def _plain(x):
    if isinstance(x, tuple) and hasattr(x, "_asdict"):
        return {k: _plain(v) for k, v in x._asdict().items()}
    if isinstance(x, (tuple, list)):
        return [_plain(v) for v in x]
    if isinstance(x, (frozenset, set)):
        return sorted(_plain(v) for v in x)
    if isinstance(x, enum.Enum):
        return x.name
    if isinstance(x, float):
        return float(f"{x:.9g}")
    return x
