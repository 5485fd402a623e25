"""What each observer can infer about who cast which revealed ballot.

Observers reason possibilistically: a voter/ballot pairing is possible
unless some hard constraint excludes it.  A voter's anonymity set is the
set of revealed ballots they could hold in at least one complete
assignment of voters to ballots that satisfies every constraint.
"""

from __future__ import annotations

from collections import deque
from itertools import permutations

from . import events as ev
from .errors import InfeasibleConstraints


class KnowledgeState:
    """Facts one observer has collected, plus the constraints they imply.

    Facts are stored as seen; ``forced``, ``forbidden``, ``choices`` and
    ``allowed`` are recompiled after every ingestion, so the order in
    which events arrive does not matter.
    """

    def __init__(self, observer):
        self.observer = observer
        self.orientation: dict[int, int] = {}
        self.cells: dict[int, tuple[int, int]] = {}  # voter -> (cell, k)
        self.patterns: dict[int, int] = {}
        self.defects: dict[tuple, int] = {}  # defect -> voter who carried it
        self.descriptions: dict[int, tuple[int, float]] = {}
        self.cast_order: dict[int, int] = {}
        self.order_kept = False
        self.receipts: tuple | None = None
        self.casters: list[int] = []
        self.pool: tuple | None = None
        self.forced: dict[int, int] = {}
        self.forbidden: set[tuple[int, int]] = set()
        self.choices: dict[int, frozenset] = {}
        self.allowed: dict[int, frozenset] = {}

    @property
    def constrained(self) -> bool:
        return bool(self.forced or self.forbidden or self.choices or self.allowed)

    def copy(self, observer=None) -> "KnowledgeState":
        k = KnowledgeState(self.observer if observer is None else observer)
        k.orientation = dict(self.orientation)
        k.cells = dict(self.cells)
        k.patterns = dict(self.patterns)
        k.defects = dict(self.defects)
        k.descriptions = dict(self.descriptions)
        k.cast_order = dict(self.cast_order)
        k.order_kept = self.order_kept
        k.receipts = self.receipts
        k.casters = list(self.casters)
        k.pool = self.pool
        k.forced = dict(self.forced)
        k.forbidden = set(self.forbidden)
        k.choices = dict(self.choices)
        k.allowed = dict(self.allowed)
        return k

    def compile(self):
        forced, forbidden, choices, allowed = {}, set(), {}, {}
        pool = self.pool
        if pool is not None:
            by_pattern = {}
            by_defect = {}
            for b in pool:
                for p in b.patterns:
                    by_pattern.setdefault(p, []).append(b.position)
                for d in b.defects:
                    by_defect.setdefault(d, []).append(b.position)
            for v, p in self.patterns.items():
                hits = by_pattern.get(p, ())
                if len(hits) == 1:
                    forced[v] = hits[0]
            for d, v in self.defects.items():
                hits = by_defect.get(d, ())
                if len(hits) == 1:
                    forced.setdefault(v, hits[0])
            if self.order_kept:
                for v, pos in self.cast_order.items():
                    if pos < len(pool):
                        forced.setdefault(v, pos)
            if self.receipts is not None:
                objectors, keys = self.receipts
                receipt_patterns = {p for p, _ in keys if p is not None}
                matched = frozenset(
                    b.position for b in pool if receipt_patterns.intersection(b.patterns))
                outsiders = [v for v in self.casters if v not in objectors]
                for v in outsiders:
                    for b in matched:
                        forbidden.add((v, b))
                if all(p is not None for p, _ in keys) and len(receipt_patterns) == len(keys):
                    if all(by_pattern.get(p) for p in receipt_patterns):
                        for v in objectors:
                            allowed[v] = matched
        for v, o in self.orientation.items():
            if v in self.cells:
                cell, k = self.cells[v]
                choices[v] = frozenset({(cell - o) % k})
        self.forced, self.forbidden, self.choices, self.allowed = forced, forbidden, choices, allowed
        return self


def ingest(knowledge: KnowledgeState, event: ev.ObservationEvent) -> KnowledgeState:
    """Fold one event into ``knowledge`` (ignored if out of the observer's scope)."""
    if not event.visible_to(knowledge.observer):
        return knowledge
    if _absorb(knowledge, event):
        knowledge.compile()
    return knowledge


def _absorb(k: KnowledgeState, e) -> bool:
    kind, d = e.kind, e.data
    if kind == ev.PEEK_ORIENTATION or kind == ev.LABEL_LEAK:
        k.orientation[d[0]] = d[1]
    elif kind == ev.MARK_PLACED:
        k.cells[d[0]] = (d[1], d[2])
    elif kind == ev.PATTERN_SEEN:
        k.patterns[d[0]] = d[1]
    elif kind == ev.DEFECT_SEEN:
        k.defects[d[1]] = d[0]
    elif kind == ev.DESCRIPTION_RECEIVED:
        k.descriptions[d[0]] = (d[1], d[2])
        return False
    elif kind == ev.CAST_ORDER:
        if d[2] == 0:
            k.casters.append(d[0])
            k.cast_order.setdefault(d[0], d[1])
    elif kind == ev.PILE_ORDER_KEPT:
        k.order_kept = True
    elif kind == ev.RECEIPT_REVEALED:
        k.receipts = (frozenset(d[0]), tuple(d[1]))
    elif kind == ev.BALLOTS_REVEALED:
        if d[0] == 0:
            k.pool = d[1]
    else:
        return False
    return True


def build(log, observer) -> KnowledgeState:
    """Knowledge of ``observer`` after reading every event in ``log``."""
    k = KnowledgeState(observer)
    relevant = ev.KNOWLEDGE_KINDS
    for e in log:
        if e.kind in relevant and (e.scope is None or observer in e.scope):
            _absorb(k, e)
    return k.compile()


def build_all(log, observers) -> dict:
    """Knowledge for many observers in one pass over the log.

    Observers who saw nothing private share the public knowledge object.
    """
    public = KnowledgeState(ev.PUBLIC)
    private: dict[int, list] = {}
    wanted = set(observers)
    relevant = ev.KNOWLEDGE_KINDS
    for e in log:
        if e.kind not in relevant:
            continue
        if e.scope is None:
            _absorb(public, e)
        else:
            for o in e.scope:
                if o in wanted:
                    private.setdefault(o, []).append(e)
    public.compile()
    out = {}
    for o in observers:
        extra = private.get(o)
        if not extra:
            out[o] = public
            continue
        k = public.copy(o)
        for e in extra:
            _absorb(k, e)
        out[o] = k.compile()
    return out


# -- anonymity sets ---------------------------------------------------------


def _edges(voters, ballots, forced, forbidden, choices, allowed):
    """Allowed ballot positions per voter (positions index ``ballots``)."""
    taken = {b: v for v, b in forced.items()}
    adj = {}
    for v in voters:
        ok_choice = choices.get(v)
        ok_ballot = allowed.get(v)
        row = []
        only = forced.get(v)
        for b, c in enumerate(ballots):
            if only is not None and b != only:
                continue
            if b in taken and taken[b] != v:
                continue
            if (v, b) in forbidden:
                continue
            if ok_choice is not None and c not in ok_choice:
                continue
            if ok_ballot is not None and b not in ok_ballot:
                continue
            row.append(b)
        adj[v] = row
    return adj


def _max_matching(voters, adj, nb):
    """Kuhn's augmenting-path matching; returns (voter->ballot, ballot->voter)."""
    match_b = [None] * nb
    match_v = {}

    def augment(v, seen):
        for b in adj[v]:
            if seen[b]:
                continue
            seen[b] = True
            if match_b[b] is None or augment(match_b[b], seen):
                match_b[b] = v
                match_v[v] = b
                return True
        return False

    for v in voters:
        augment(v, [False] * nb)
    return match_v, match_b


def consistent_sets(voters, ballots, forced=None, forbidden=(), choices=None, allowed=None) -> dict:
    """Anonymity set of every voter.

    ``ballots`` lists the decoded choice of each revealed ballot (None if
    spoiled); results are sets of positions.  Edge (v, b) lies in some
    voter-saturating matching iff b is v's partner in a fixed maximum
    matching, b is free, or v's current partner can be re-seated along an
    alternating path ending at a free ballot or at v's old ballot.
    """
    forced = forced or {}
    choices = choices or {}
    allowed = allowed or {}
    forbidden = set(forbidden)
    voters = list(voters)
    nb = len(ballots)
    adj = _edges(voters, ballots, forced, forbidden, choices, allowed)
    match_v, match_b = _max_matching(voters, adj, nb)
    if len(match_v) < len(voters):
        raise InfeasibleConstraints(f"only {len(match_v)} of {len(voters)} voters can be seated")

    reach_cache = {}

    def reach(u):
        # Ballots reachable from voter u by leaving u's current ballot.
        if u in reach_cache:
            return reach_cache[u]
        seen = set()
        q = deque([u])
        seen_v = {u}
        while q:
            x = q.popleft()
            for b in adj[x]:
                if b == match_v[x] or b in seen:
                    continue
                seen.add(b)
                w = match_b[b]
                if w is not None and w not in seen_v:
                    seen_v.add(w)
                    q.append(w)
        reach_cache[u] = seen
        return seen

    out = {}
    for v in voters:
        mine = match_v[v]
        res = set()
        for b in adj[v]:
            if b == mine:
                res.add(b)
                continue
            u = match_b[b]
            if u is None:
                res.add(b)
                continue
            r = reach(u)
            if mine in r or any(match_b[x] is None for x in r):
                res.add(b)
        out[v] = res
    return out


def brute_force_sets(voters, ballots, forced=None, forbidden=(), choices=None, allowed=None) -> dict:
    """Same contract as ``consistent_sets`` by enumerating every injection."""
    forced = forced or {}
    choices = choices or {}
    allowed = allowed or {}
    forbidden = set(forbidden)
    voters = list(voters)
    out = {v: set() for v in voters}
    feasible = False
    for perm in permutations(range(len(ballots)), len(voters)):
        ok = True
        for v, b in zip(voters, perm):
            if v in forced and forced[v] != b:
                ok = False
            elif b in forced.values() and forced.get(v) != b:
                ok = False
            elif (v, b) in forbidden:
                ok = False
            elif v in choices and ballots[b] not in choices[v]:
                ok = False
            elif v in allowed and b not in allowed[v]:
                ok = False
            if not ok:
                break
        if ok:
            feasible = True
            for v, b in zip(voters, perm):
                out[v].add(b)
    if not feasible:
        raise InfeasibleConstraints("no assignment satisfies the constraints")
    return out


def _pool_choices(pool):
    return [b.choice for b in pool]


def anonymity_sets(knowledge: KnowledgeState, pool=None, voters=None) -> dict:
    pool = knowledge.pool if pool is None else pool
    voters = knowledge.casters if voters is None else voters
    if not knowledge.constrained:
        everything = set(range(len(pool)))
        return {v: set(everything) for v in voters}
    ballots = _pool_choices(pool)
    forced = knowledge.forced
    # a tracked position outranks a remembered choice; the two disagree only after tampering
    choices = {v: c for v, c in knowledge.choices.items()
               if v not in forced or forced[v] >= len(ballots) or ballots[forced[v]] in c}
    try:
        return consistent_sets(voters, ballots, forced, knowledge.forbidden, choices, knowledge.allowed)
    except InfeasibleConstraints:
        return consistent_sets(voters, ballots, forced, knowledge.forbidden, None, knowledge.allowed)


def anonymity_set(knowledge: KnowledgeState, observer, voter, pool=None) -> set:
    """Revealed positions ``voter`` may hold in ``observer``'s eyes."""
    if knowledge.observer != observer and knowledge.observer is not ev.PUBLIC:
        raise ValueError(f"knowledge belongs to {knowledge.observer}, not {observer}")
    sets = anonymity_sets(knowledge, pool)
    if voter not in sets:
        return set()
    return sets[voter]


def vote_disclosure(knowledge, observer, voter, pool=None) -> set:
    pool = knowledge.pool if pool is None else pool
    return {pool[b].choice for b in anonymity_set(knowledge, observer, voter, pool)}


def coercion_catch(knowledge: KnowledgeState, voter, claimed, rng, pool=None) -> bool:
    """Whether the coercer, holding ``knowledge``, sees through the claim.

    ``claimed`` is a revealed position (None when the voter had no ballot
    to point at, which always exposes them).
    """
    pool = knowledge.pool if pool is None else pool
    if claimed is None:
        return True
    desc = knowledge.descriptions.get(voter)
    if desc is not None:
        pattern, fidelity = desc
        if rng.random() < fidelity and pattern not in pool[claimed].patterns:
            return True
    try:
        inside = claimed in anonymity_set(knowledge, knowledge.observer, voter, pool)
    except InfeasibleConstraints:
        return True
    return not inside
