"""Physical objects of a boardroom election and their manipulations.

Ballots carry a hidden orientation in the cyclic group Z_k.  Cells are
indexed clockwise in the ballot's own frame and a choice lands in cell
``(choice + orientation) mod k``.  Operations mutate the object they are
handed and return it, so ``ballot = fold(ballot)`` and ``fold(ballot)``
are equivalent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

from . import events as ev
from .rand import below
from .errors import (
    AlreadyFolded,
    CellOutOfRange,
    ChoiceOutOfRange,
    ColumnsMismatch,
    DryStamp,
    EmptyBag,
    NotFolded,
    NotParallelDesign,
    OrientationFrozen,
    WrongPhase,
)

MAX_ARITY = 6

NOMINAL_WEIGHT = 4.0
WEIGHT_JITTER = 0.05
SCALE_TOLERANCE = 1.0
PATTERN_SPACE = 1000
P_DESC = 0.05
P_CONF = 0.01
STAMP_CHARGES = 3


class Layout(str, enum.Enum):
    BINARY = "binary-two-column"
    KGON = "k-gon"
    PARALLEL = "parallel-split"


class Ink(str, enum.Enum):
    VISIBLE = "visible"
    INVISIBLE = "invisible"
    REVEALED = "revealed"


COMMON_DISK = "disk"  # pattern of the plain visible-ink disk
PEN = "pen"  # pattern of a hand-drawn mark on a plain paper ballot


@dataclass(frozen=True)
class BallotDesign:
    k: int
    layout: Layout = Layout.KGON
    nominal_weight: float = NOMINAL_WEIGHT

    def __post_init__(self):
        if not 2 <= self.k <= MAX_ARITY:
            raise ValueError(f"arity k={self.k} outside [2, {MAX_ARITY}]")
        if self.layout is Layout.BINARY and self.k != 2:
            raise ValueError("binary-two-column layout requires k=2")
        if self.nominal_weight <= 0:
            raise ValueError("nominal_weight must be positive")

    @property
    def columns(self) -> int:
        return 2 if self.layout is Layout.PARALLEL else 1


class Defect(NamedTuple):
    kind: str  # pinhole | smudge | crease | tear | premark
    position: int
    introduced_by: int


@dataclass(slots=True)
class Mark:
    cell: int
    ink: Ink
    pattern: object  # int pattern id, COMMON_DISK or PEN
    half: int = 0

    @property
    def is_vote(self) -> bool:
        return self.pattern != COMMON_DISK


@dataclass(slots=True)
class Ballot:
    serial: str
    design: BallotDesign
    orientation: int = 0
    folded: bool = False
    marks: list = field(default_factory=list)
    defects: list = field(default_factory=list)
    weight: float = NOMINAL_WEIGHT
    half: int | None = None  # set on the pieces produced by cut_parallel
    twin: str | None = None
    printed: bool = True  # False for ballots smuggled in by an attack

    @property
    def k(self) -> int:
        return self.design.k


class VisualSecret(NamedTuple):
    pattern_id: int
    p_desc: float = P_DESC
    p_conf: float = P_CONF


@dataclass(slots=True)
class Stamp:
    secret: VisualSecret | None
    self_inking: bool = True
    common_mark: bool = False
    charges: int = STAMP_CHARGES


def common_stamp(charges=10**9) -> Stamp:
    """The shared stamp that only prints a visible disk."""
    return Stamp(secret=None, common_mark=True, charges=charges)


class Bag:
    """Opaque bag; draws are uniform under the caller's seeded RNG."""

    def __init__(self, items=()):
        self.items = list(items)

    def put(self, item):
        self.items.append(item)

    def __len__(self):
        return len(self.items)


@dataclass
class BallotBoxState:
    contents: list = field(default_factory=list)
    on_scale: bool = True
    scale_readings: list = field(default_factory=list)
    scale_tolerance: float = SCALE_TOLERANCE
    expected_weight: float = NOMINAL_WEIGHT
    label: int = 0


class BallotView(NamedTuple):
    labels: tuple | None  # choice printed at each cell; None while folded
    marks: tuple  # (cell, half, pattern) for every mark an observer can see
    defects: tuple


# -- geometry ---------------------------------------------------------------


def cell_for_choice(design: BallotDesign, orientation: int, choice: int) -> int:
    k = design.k
    if not 0 <= choice < k:
        raise ChoiceOutOfRange(f"choice {choice} not in [0, {k})")
    return (choice + orientation) % k


def choice_for_cell(design: BallotDesign, orientation: int, cell: int) -> int:
    k = design.k
    if not 0 <= cell < k:
        raise CellOutOfRange(f"cell {cell} not in [0, {k})")
    return (cell - orientation) % k


def project(ballot: Ballot) -> BallotView:
    """The agent-visible view of a ballot lying in front of an observer."""
    labels = None
    if not ballot.folded:
        labels = tuple((c - ballot.orientation) % ballot.k for c in range(ballot.k))
    marks = tuple(
        (m.cell, m.half, m.pattern) for m in ballot.marks if m.ink is not Ink.INVISIBLE
    )
    return BallotView(labels, marks, tuple(ballot.defects))


def vote_cells(ballot: Ballot) -> set:
    return {m.cell for m in ballot.marks if m.pattern != COMMON_DISK}


def decode(ballot: Ballot) -> int | None:
    """Choice a revealed ballot counts for, or None when spoiled.

    A ballot is spoiled unless every vote mark sits in the same cell.
    """
    cell = None
    for m in ballot.marks:
        if m.pattern != COMMON_DISK:
            if cell is None:
                cell = m.cell
            elif m.cell != cell:
                return None
    if cell is None:
        return None
    return (cell - ballot.orientation) % ballot.design.k


def read_revealed(ballot: Ballot) -> tuple:
    """(decoded choice, secret patterns) of a ballot whose ink is revealed.

    Same answers as ``decode`` and ``patterns`` in a single pass.
    """
    cell = None
    spoiled = False
    found = []
    for m in ballot.marks:
        p = m.pattern
        if p == COMMON_DISK:
            continue
        if cell is None:
            cell = m.cell
        elif m.cell != cell:
            spoiled = True
        if p.__class__ is int and p not in found:
            found.append(p)
    if spoiled or cell is None:
        choice = None
    else:
        choice = (cell - ballot.orientation) % ballot.design.k
    if len(found) > 1:
        found.sort()
    return choice, tuple(found)


def patterns(ballot: Ballot) -> tuple:
    return tuple(sorted({m.pattern for m in ballot.marks if isinstance(m.pattern, int)}))


# -- manipulations ----------------------------------------------------------


def fold(ballot: Ballot) -> Ballot:
    if ballot.folded:
        raise AlreadyFolded(ballot.serial)
    ballot.folded = True
    return ballot


def unfold(ballot: Ballot) -> Ballot:
    """Counting-time unfolding by the authority; labels become visible."""
    ballot.folded = False
    return ballot


def rotate(ballot, r, concealed=True, *, log=None, actor=None, observers=(), strict=True):
    """Turn a folded ballot by ``r`` steps.

    An unconcealed rotation emits a PeekOrientation event to ``observers``.
    Rotating an unfolded ballot is an error in strict mode; in lenient
    mode the labels are exposed to ``observers`` instead.
    """
    k = ballot.design.k
    if not 0 <= r < k:
        raise ValueError(f"rotation {r} not in [0, {k})")
    if any(m.is_vote for m in ballot.marks):
        raise OrientationFrozen(ballot.serial)
    if not ballot.folded:
        if strict:
            raise NotFolded(ballot.serial)
        ballot.orientation = (ballot.orientation + r) % k
        if log is not None and observers:
            log.emit(frozenset(observers), ev.LABEL_LEAK, actor, ballot.orientation)
        return ballot
    ballot.orientation = (ballot.orientation + r) % k
    if not concealed and log is not None and observers:
        log.emit(frozenset(observers), ev.PEEK_ORIENTATION, actor, ballot.orientation)
    return ballot


def imprint(ballot: Ballot, cell: int, stamp: Stamp, half: int = 0, feint: bool = False) -> Ballot:
    """Press ``stamp`` onto ``cell``.

    A stamp with ``common_mark`` leaves a visible disk before its secret
    (if any).  A feint goes through the motion without touching paper:
    nothing is printed and no charge is used.
    """
    if not ballot.folded:
        raise NotFolded(ballot.serial)
    if not 0 <= cell < ballot.design.k:
        raise CellOutOfRange(f"cell {cell} not in [0, {ballot.design.k})")
    if not 0 <= half < ballot.design.columns:
        raise CellOutOfRange(f"column {half} not on this design")
    if stamp.charges < 1:
        raise DryStamp()
    if feint:
        return ballot
    if stamp.common_mark:
        ballot.marks.append(Mark(cell, Ink.VISIBLE, COMMON_DISK, half))
    if stamp.secret is not None:
        ballot.marks.append(Mark(cell, Ink.INVISIBLE, stamp.secret.pattern_id, half))
    stamp.charges -= 1
    return ballot


def pen_mark(ballot: Ballot, cell: int) -> Ballot:
    """Visible pen mark on a plain (unfolded) paper ballot."""
    if not 0 <= cell < ballot.design.k:
        raise CellOutOfRange(f"cell {cell} not in [0, {ballot.design.k})")
    ballot.marks.append(Mark(cell, Ink.VISIBLE, PEN))
    return ballot


def cut_parallel(ballot: Ballot, *, log=None, actor=None) -> tuple[Ballot, Ballot]:
    """Cut a parallel-split ballot along its centre line.

    Observers compare the visible marks of both columns (the invisible
    secret is not yet readable); different rows raise ColumnsMismatch.
    """
    if ballot.design.layout is not Layout.PARALLEL:
        raise NotParallelDesign(ballot.serial)
    rows = []
    for h in (0, 1):
        col = [m for m in ballot.marks if m.half == h]
        seen = {m.cell for m in col if m.ink is not Ink.INVISIBLE} or {m.cell for m in col}
        rows.append(seen)
    if not rows[0] or not rows[1] or rows[0] != rows[1]:
        if log is not None:
            log.emit(ev.PUBLIC, ev.COLUMNS_MISMATCH, actor)
        raise ColumnsMismatch(f"{ballot.serial}: rows {sorted(rows[0])} vs {sorted(rows[1])}")
    serials = (ballot.serial + "a", ballot.serial + "b")
    halves = []
    for h in (0, 1):
        halves.append(
            Ballot(
                serial=serials[h],
                design=ballot.design,
                orientation=ballot.orientation,
                folded=ballot.folded,
                marks=[Mark(m.cell, m.ink, m.pattern, h) for m in ballot.marks if m.half == h],
                defects=list(ballot.defects),
                weight=ballot.weight / 2,
                half=h,
                twin=serials[1 - h],
                printed=ballot.printed,
            )
        )
    return halves[0], halves[1]


def draw(bag: Bag, rng):
    if not bag.items:
        raise EmptyBag()
    i = below(rng, len(bag.items))
    items = bag.items
    items[i], items[-1] = items[-1], items[i]
    return items.pop()


def cast(box: BallotBoxState, ballots, *, log=None, actor=None) -> list:
    """Drop one or more ballots into ``box`` in a single motion.

    Emits a public CastOrder event and returns the detection events
    raised by the scale.
    """
    if isinstance(ballots, Ballot):
        ballots = (ballots,)
    position = len(box.contents)
    delta = 0.0
    for b in ballots:
        box.contents.append(b)
        delta += b.weight
    detections = []
    if box.on_scale:
        last = box.scale_readings[-1] if box.scale_readings else 0.0
        box.scale_readings.append(last + delta)
        if abs(delta - box.expected_weight) > box.scale_tolerance and log is not None:
            detections.append(log.emit(ev.PUBLIC, ev.MULTIPLE_CAST, actor, box.label, delta))
    if log is not None:
        log.emit(ev.PUBLIC, ev.CAST_ORDER, actor, position, box.label)
    return detections


def reveal_ink(ballots, phase) -> list:
    if phase != ev.Phase.COUNT_VERIFY:
        raise WrongPhase(f"revealing ink sprayed during {ev.Phase(phase).name}")
    for b in ballots:
        for m in b.marks:
            if m.ink is Ink.INVISIBLE:
                m.ink = Ink.REVEALED
    return ballots
