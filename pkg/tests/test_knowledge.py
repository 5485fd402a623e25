import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boardroom import events as ev
from boardroom import knowledge as kn
from boardroom import protocol as pr
from boardroom.agents import AdversaryStrategy, Role, VoterProfile
from boardroom.analysis import honest_roster
from boardroom.analysis.oracle import random_instance
from boardroom.errors import InfeasibleConstraints
from boardroom.events import EventLog, RevealedView


def pool_of(choices, patterns=None, defects=None):
    n = len(choices)
    patterns = patterns or [(500 + i,) for i in range(n)]
    defects = defects or [()] * n
    return tuple(RevealedView(i, patterns[i], choices[i], defects[i]) for i in range(n))


def log_with(pool, *events, casters=None):
    log = EventLog()
    for v in casters if casters is not None else range(len(pool)):
        log.emit(None, ev.CAST_ORDER, v, v, 0)
    for scope, kind, *data in events:
        log.emit(scope, kind, *data)
    log.emit(None, ev.BALLOTS_REVEALED, 0, pool)
    return log


# -- ingestion -------------------------------------------------------------


def test_pattern_seen_forces_link():
    pool = pool_of([0, 1, 0], [(11,), (22,), (33,)])
    k = kn.build(log_with(pool, (frozenset({9}), ev.PATTERN_SEEN, 1, 33)), 9)
    assert k.forced == {1: 2}
    assert kn.anonymity_set(k, 9, 1) == {2}


def test_scope_is_respected():
    pool = pool_of([0, 1, 0], [(11,), (22,), (33,)])
    log = log_with(pool, (frozenset({9}), ev.PATTERN_SEEN, 1, 33))
    assert kn.build(log, 8).forced == {}
    k = kn.KnowledgeState(8)
    for e in log:
        kn.ingest(k, e)
    assert not k.constrained


def test_peek_plus_mark_constrains_choice():
    pool = pool_of([0, 1, 1])
    k = kn.build(log_with(pool, (frozenset({2}), ev.PEEK_ORIENTATION, 0, 1),
                          (None, ev.MARK_PLACED, 0, 0, 2)), 2)
    assert k.choices == {0: frozenset({1})}
    assert kn.vote_disclosure(k, 2, 0) == {1}
    assert kn.anonymity_set(k, 2, 0) == {1, 2}


def test_no_events_no_constraints():
    pool = pool_of([0, 1, 0, 1])
    k = kn.build(log_with(pool), 3)
    assert not k.constrained
    assert kn.anonymity_set(k, 3, 0) == {0, 1, 2, 3}
    assert kn.vote_disclosure(k, 3, 0) == {0, 1}


def test_unanimous_pool_discloses_everything():
    pool = pool_of([0, 0, 0])
    k = kn.build(log_with(pool), None)
    assert kn.vote_disclosure(k, None, 1) == {0}


def test_unique_defect_forces_link():
    pool = pool_of([0, 1, 1], defects=[(), (("smudge", 3, 0),), ()])
    k = kn.build(log_with(pool, (frozenset({5}), ev.DEFECT_SEEN, 0, ("smudge", 3, 0))), 5)
    assert k.forced == {0: 1}


def test_kept_pile_order_reveals_everyone():
    pool = pool_of([1, 0, 1])
    k = kn.build(log_with(pool, (None, ev.PILE_ORDER_KEPT)), None)
    assert {v: kn.anonymity_set(k, None, v) for v in range(3)} == {0: {0}, 1: {1}, 2: {2}}


def test_description_is_held_not_compiled():
    pool = pool_of([0, 1])
    k = kn.build(log_with(pool, (frozenset({-2}), ev.DESCRIPTION_RECEIVED, 0, 501, 1.0)), -2)
    assert k.descriptions == {0: (501, 1.0)}
    assert not k.constrained


def test_build_all_matches_build():
    pool = pool_of([0, 1, 0, 1], [(1,), (2,), (3,), (4,)])
    log = log_with(pool, (frozenset({0, 2}), ev.PEEK_ORIENTATION, 1, 1),
                   (None, ev.MARK_PLACED, 1, 0, 2),
                   (frozenset({-2}), ev.PATTERN_SEEN, 3, 2))
    observers = [0, 1, 2, 3, ev.EA, ev.OUTSIDER]
    together = kn.build_all(log, observers)
    for o in observers:
        alone = kn.build(log, o)
        assert kn.anonymity_sets(together[o]) == kn.anonymity_sets(alone)
    assert together[1] is together[3]  # nothing private for either


def test_knowledge_of_another_observer_rejected():
    k = kn.build(log_with(pool_of([0, 1, 0])), 4)
    with pytest.raises(ValueError):
        kn.anonymity_set(k, 5, 0)


# -- receipts --------------------------------------------------------------


def test_receipt_reveal_confines_objectors():
    # voters 0 and 1 object; their receipts carry patterns 501 and 502
    pool = pool_of([0, 1, 1, 0], [(500,), (501,), (502,), (503,)])
    log = log_with(pool, (None, ev.RECEIPT_REVEALED, (0, 1), ((501, 1), (502, 1))))
    k = kn.build(log, None)
    sets = kn.anonymity_sets(k)
    assert sets[0] <= {1, 2} and sets[1] <= {1, 2}
    assert sets[2] == sets[3] == {0, 3}


def test_missing_receipt_match_only_forbids_outsiders():
    pool = pool_of([0, 1, 1], [(500,), (501,), (502,)])
    # objector 0's receipt pattern 999 is nowhere in the pool (their ballot was replaced)
    log = log_with(pool, (None, ev.RECEIPT_REVEALED, (0,), ((999, 0),)))
    k = kn.build(log, None)
    assert k.allowed == {}
    assert kn.anonymity_sets(k)[0] == {0, 1, 2}


def test_receipt_cost_end_to_end():
    strategies = [AdversaryStrategy("FalseObjection", actor=a) for a in (0, 1, 2)]
    config = pr.ElectionConfig(7, physical=pr.PhysicalParams(p_desc=0.0, p_conf=0.0),
                               variants=frozenset({"receipt_ballots"}))
    s = pr.simulate_bvp1(config, honest_roster([0, 0, 0, 0, 0, 1, 1]), strategies, random.Random(0))
    assert s.adjudication is not None
    k = kn.build(s.log, ev.PUBLIC)
    objectors, keys = k.receipts
    receipt_patterns = {p for p, _ in keys}
    receipt_positions = {b.position for b in k.pool if receipt_patterns & set(b.patterns)}
    for v in objectors:
        assert kn.anonymity_set(k, ev.PUBLIC, v) <= receipt_positions


# -- matching vs. enumeration ---------------------------------------------


def test_forced_pair_example():
    sets = kn.consistent_sets([0, 1, 2], [0, 1, 1], forced={0: 1})
    assert sets == kn.brute_force_sets([0, 1, 2], [0, 1, 1], forced={0: 1})
    assert sets == {0: {1}, 1: {0, 2}, 2: {0, 2}}


def test_infeasible_constraints_raise():
    with pytest.raises(InfeasibleConstraints):
        kn.consistent_sets([0, 1], [0, 0], choices={0: frozenset({1})})
    with pytest.raises(InfeasibleConstraints):
        kn.brute_force_sets([0, 1], [0, 0], choices={0: frozenset({1})})


def test_extra_ballots_leave_room():
    # three voters, four ballots: an injected ballot means any voter may be unmatched to it
    sets = kn.consistent_sets([0, 1, 2], [0, 1, 0, 1], forced={2: 3})
    assert sets == kn.brute_force_sets([0, 1, 2], [0, 1, 0, 1], forced={2: 3})


def test_oracle_agreement_on_random_instances():
    rng = random.Random(12)
    for _ in range(300):
        n = rng.randint(1, 6)
        inst = random_instance(rng, n, rng.randint(2, 3))
        args = (inst["voters"], inst["ballots"], inst["forced"], inst["forbidden"],
                inst["choices"], inst["allowed"])
        assert kn.consistent_sets(*args) == kn.brute_force_sets(*args)


@st.composite
def instances(draw):
    n = draw(st.integers(1, 5))
    extra = draw(st.integers(0, 1))
    ballots = draw(st.lists(st.sampled_from([0, 1, None]), min_size=n + extra, max_size=n + extra))
    voters = list(range(n))
    nb = len(ballots)
    forbidden = draw(st.sets(st.tuples(st.sampled_from(voters), st.integers(0, nb - 1)), max_size=4))
    choices = draw(st.dictionaries(st.sampled_from(voters),
                                   st.frozensets(st.sampled_from([0, 1]), min_size=1), max_size=2))
    forced = {}
    if draw(st.booleans()):
        forced[draw(st.sampled_from(voters))] = draw(st.integers(0, nb - 1))
    return voters, ballots, forced, forbidden, choices


@settings(max_examples=300, deadline=None)
@given(instances())
def test_matching_equals_enumeration(inst):
    voters, ballots, forced, forbidden, choices = inst
    try:
        expected = kn.brute_force_sets(voters, ballots, forced, forbidden, choices)
    except InfeasibleConstraints:
        with pytest.raises(InfeasibleConstraints):
            kn.consistent_sets(voters, ballots, forced, forbidden, choices)
        return
    assert kn.consistent_sets(voters, ballots, forced, forbidden, choices) == expected


@settings(max_examples=200, deadline=None)
@given(instances(), st.tuples(st.integers(0, 4), st.integers(0, 5)))
def test_more_constraints_never_enlarge_sets(inst, extra):
    voters, ballots, forced, forbidden, choices = inst
    try:
        before = kn.consistent_sets(voters, ballots, forced, forbidden, choices)
        after = kn.consistent_sets(voters, ballots, forced, forbidden | {extra}, choices)
    except InfeasibleConstraints:
        return
    for v in voters:
        assert after[v] <= before[v]


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**32), st.floats(0, 1))
def test_ingestion_is_monotone(n, seed, p_peek):
    config = pr.ElectionConfig(n, behavior=pr.BehaviorParams(p_peek=p_peek, p_unconcealed=0.2))
    rng = random.Random(seed)
    s = pr.simulate_bvp1(config, honest_roster([rng.randrange(2) for _ in range(n)]), rng=rng)
    observer = 0
    k = kn.KnowledgeState(observer)
    prev = None
    for e in s.log:
        kn.ingest(k, e)
        if k.pool is None:
            continue
        sets = kn.anonymity_sets(k)
        if prev is not None:
            assert all(sets[v] <= prev[v] for v in prev)
        prev = sets


# -- coercion --------------------------------------------------------------


def test_no_description_never_caught_with_cover():
    pool = pool_of([0, 1, 0, 1])
    k = kn.build(log_with(pool), ev.OUTSIDER)
    rng = random.Random(0)
    assert not any(kn.coercion_catch(k, 1, 2, rng) for _ in range(100))


def test_faithful_description_catches_lie():
    pool = pool_of([0, 1, 0], [(7,), (8,), (9,)])
    k = kn.build(log_with(pool, (frozenset({-2}), ev.DESCRIPTION_RECEIVED, 1, 8, 1.0)), -2)
    assert kn.coercion_catch(k, 1, 0, random.Random(0))
    assert not kn.coercion_catch(k, 1, 1, random.Random(0))


def test_claim_forced_to_someone_else():
    pool = pool_of([0, 1, 0], [(7,), (8,), (9,)])
    k = kn.build(log_with(pool, (frozenset({-2}), ev.PATTERN_SEEN, 0, 7)), -2)
    assert kn.coercion_catch(k, 1, 0, random.Random(0))
    assert not kn.coercion_catch(k, 1, 2, random.Random(0))


def test_no_ballot_to_point_at():
    k = kn.build(log_with(pool_of([1, 1])), -2)
    assert kn.coercion_catch(k, 0, None, random.Random(0))


def test_coerced_voter_in_trial_has_description_only_for_adversary():
    roster = honest_roster([0, 1, 0, 1])
    roster[1] = VoterProfile(1, 1, 1, Role.COERCED, demand=0, adversary=ev.OUTSIDER, p_desc=0.5)
    s = pr.simulate_bvp1(pr.ElectionConfig(4), roster, rng=random.Random(0))
    (e,) = s.log.of_kind(ev.DESCRIPTION_RECEIVED)
    assert e.scope == frozenset({ev.OUTSIDER})
    assert kn.build(s.log, 0).descriptions == {}


def test_tracked_position_outranks_stale_choice():
    # the observer saw voter 0 mark 0 and tracked them to a ballot that now reads 1
    k = kn.KnowledgeState(1)
    k.casters = [0, 1, 2]
    k.forced = {0: 0, 1: 1, 2: 2}
    k.choices = {0: frozenset({0})}
    pool = tuple(ev.RevealedView(i, (i,), c, ()) for i, c in enumerate([1, 0, 0]))
    assert kn.anonymity_sets(k, pool) == {0: {0}, 1: {1}, 2: {2}}
