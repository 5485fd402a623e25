import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boardroom import protocol as pr
from boardroom.agents import AdversaryStrategy
from boardroom.analysis import (
    Accumulator,
    Scenario,
    audit_table,
    compare_protocols,
    emit_report,
    exhaustive_oracle,
    honest_roster,
    monte_carlo,
    parse_report,
    run_trial,
    set_path,
    simulate_audit,
    wilson,
)
from boardroom.analysis.oracle import compositions, decision_table
from boardroom.errors import BoundTooLarge, MismatchedScenarios, UnsupportedFormat, ValidationError
from boardroom.rand import derive_seed, splitmix64, trial_rng

Z = 1.959963984540054


def scenario(prefs, strategies=(), trials=200, seed=1, variants=(), quiet=True, **kw):
    phys = pr.PhysicalParams(p_desc=0.0, p_conf=0.0) if quiet else pr.PhysicalParams()
    config = pr.ElectionConfig(len(prefs), max(prefs) + 1 if max(prefs) else 2,
                               variants=frozenset(variants), physical=phys)
    return Scenario(config, honest_roster(prefs), list(strategies), trials=trials, seed=seed, **kw)


# -- seeds -----------------------------------------------------------------


def test_splitmix64_reference_values():
    # first outputs of the reference generator seeded with 0 (state advanced before mixing)
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_derived_seeds_differ_by_trial_and_point():
    seeds = {derive_seed(5, t, p) for t in range(100) for p in range(5)}
    assert len(seeds) == 500
    assert derive_seed(5, 3, 1) == derive_seed(5, 3, 1)


# -- Wilson intervals ------------------------------------------------------


def _wilson_closed_form(k, n):
    p = k / n
    centre = (2 * n * p + Z * Z) / (2 * (n + Z * Z))
    half = Z * math.sqrt(Z * Z + 4 * n * p * (1 - p)) / (2 * (n + Z * Z))
    return centre - half, centre + half


@pytest.mark.parametrize("k,n", [(0, 10), (3, 10), (7, 20), (500, 1000), (999, 1000)])
def test_wilson_matches_closed_form(k, n):
    lo, hi = wilson(k, n)
    elo, ehi = _wilson_closed_form(k, n)
    assert lo == pytest.approx(max(0.0, elo), abs=1e-12)
    assert hi == pytest.approx(min(1.0, ehi), abs=1e-12)


def test_wilson_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.stats.proportion")
    for k, n in [(1, 7), (13, 50), (700, 1000)]:
        assert wilson(k, n) == pytest.approx(sm.proportion_confint(k, n, method="wilson"), abs=1e-9)


def test_zero_events_bound():
    lo, hi = wilson(0, 10_000)
    assert lo == 0.0
    assert hi == pytest.approx(Z * Z / (10_000 + Z * Z))
    assert hi < 0.0004


def test_wilson_coverage():
    p = 0.3
    covered = 0
    for t in range(200):
        rng = trial_rng(0, t)
        k = sum(rng.random() < p for _ in range(1000))
        lo, hi = wilson(k, 1000)
        covered += lo <= p <= hi
    assert covered >= 0.93 * 200


def test_wilson_exact_coverage():
    stats = pytest.importorskip("scipy.stats")
    n, p = 1000, 0.3
    cover = sum(stats.binom.pmf(k, n, p) for k in range(n + 1) if wilson(k, n)[0] <= p <= wilson(k, n)[1])
    assert cover == pytest.approx(0.95, abs=0.01)


def test_wilson_rejects_bad_input():
    with pytest.raises(ValueError):
        wilson(1, 0)
    with pytest.raises(ValueError):
        wilson(5, 4)


# -- accumulator -----------------------------------------------------------


class _M:
    def __init__(self, a, b, h):
        self.a, self.b, self.h = a, b, h

    def rate_items(self):
        yield "a", int(self.a), 1

    def sum_items(self):
        yield "b", self.b, 1

    def hist_items(self):
        yield "h", (self.h,)


metrics = st.lists(st.builds(_M, st.booleans(), st.integers(0, 50), st.integers(0, 4)), max_size=20)


def _acc(ms):
    acc = Accumulator()
    for m in ms:
        acc.add(m)
    return acc


@given(metrics, metrics, metrics)
def test_merge_associative_and_commutative(xs, ys, zs):
    a, b, c = _acc(xs), _acc(ys), _acc(zs)
    left = a.merge(b).merge(c).summary()
    right = a.merge(b.merge(c)).summary()
    assert left == right
    assert a.merge(b).summary() == b.merge(a).summary()
    assert left == _acc(xs + ys + zs).summary()


@given(metrics)
def test_rates_in_unit_interval(xs):
    for r in _acc(xs).summary()["rates"].values():
        assert 0.0 <= r["lo"] <= r["rate"] <= r["hi"] <= 1.0


# -- trials ----------------------------------------------------------------


def test_honest_trial():
    m = run_trial(scenario([0, 0, 1, 0, 1]), 0)
    assert not m.integrity_violated and not m.annulled and m.winner == 0
    assert m.anonymity_sizes == (5,) * 5


def test_replacement_with_attentive_victim():
    s = scenario([0, 0, 0, 0, 1, 1], [AdversaryStrategy("EAReplacement", target=2, choice=1, p_detect=0.0)])
    m = run_trial(s, 0)
    assert m.integrity_violated and m.counted_violated
    assert m.violation_detected and not m.undetected_violation


def test_false_objection_flood():
    flood = [AdversaryStrategy("FalseObjection", actor=a) for a in (0, 1)]
    m = run_trial(scenario([0, 0, 0, 0, 0, 1, 1], flood), 0)
    assert m.annulled and m.false_annulment and not m.integrity_violated


def test_chain_voting_against_preference_breaks_cast_clause():
    s = scenario([0, 1, 1, 0, 1], [AdversaryStrategy("ChainVoting", actor=0, target=2, choice=0, p_detect=0.0)])
    m = run_trial(s, 0)
    assert m.cast_violated and m.integrity_violated and not m.violation_detected


def test_run_trial_is_pure():
    s = scenario([0, 1, 0, 1, 1], [AdversaryStrategy("IdentifyingMark", actor=1)], quiet=False)
    assert run_trial(s, 4, 2) == run_trial(s, 4, 2)


KINDS = ["ChainVoting", "DoubleCast", "EAReplacement", "IdentifyingMark", "FalseObjection"]


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 8), st.sampled_from(KINDS), st.integers(0, 2**32),
       st.sampled_from([(), ("receipt_ballots",), ("parallel_tally",)]), st.sampled_from(["BVP1", "SPB"]))
def test_metric_invariants(n, kind, seed, variants, protocol):
    rng = random.Random(seed)
    prefs = [rng.randrange(2) for _ in range(n)]
    strat = {"ChainVoting": dict(actor=0, target=n - 1, choice=1),
             "EAReplacement": dict(choice=1)}.get(kind, dict(actor=1))
    if protocol == "SPB":
        variants = ()
    s = scenario(prefs, [AdversaryStrategy(kind, **strat)], seed=seed, variants=variants,
                 quiet=False, protocol=protocol)
    m = run_trial(s, 0)
    if m.false_annulment:
        assert m.annulled
    if m.violation_detected:
        assert m.integrity_events > 0 or m.objections > 0 or (m.valid_objections or 0) > 0
    if m.integrity_violated:
        # a like-for-like swap can break a clause without moving the counts, so only one direction holds
        assert m.cast_violated or m.collected_violated or m.counted_violated
    assert all(1 <= d for d in m.disclosure_sizes)


# -- Monte Carlo -----------------------------------------------------------


def test_honest_monte_carlo_zero_annulment():
    s = scenario([0, 0, 1], trials=10_000, seed=3)
    r = monte_carlo(s)["points"][0]["rates"]["annulled"]
    assert r["count"] == 0 and r["lo"] == 0.0
    assert r["hi"] == pytest.approx(Z * Z / (10_000 + Z * Z))


def test_workers_do_not_change_report():
    s = scenario([0, 1, 0, 1, 0], [AdversaryStrategy("IdentifyingMark", actor=1)], trials=60, quiet=False)
    assert emit_report(monte_carlo(s, 1)) == emit_report(monte_carlo(s, 2))


def test_sweep_points_are_cartesian():
    s = scenario([0, 1, 0, 1, 0], trials=5,
                 sweep=[("behavior.p_peek", [0.0, 0.5]), ("detection.chain_voting", [0.1, 0.2, 0.3])])
    rep = monte_carlo(s)
    assert len(rep["points"]) == 6
    assert rep["points"][4]["params"] == {"behavior.p_peek": 0.5, "detection.chain_voting": 0.2}


def test_set_path_sections():
    s = scenario([0, 1, 0, 1, 0], [AdversaryStrategy("IdentifyingMark", actor=1)])
    set_path(s, "roster.p_forget", 0.25)
    assert {v.p_forget for v in s.roster} == {0.25}
    set_path(s, "strategies.0.p_detect", 0.4)
    assert s.strategies[0].p_detect == 0.4
    set_path(s, "election.variants", ["voting_station"])
    assert s.config.variants == frozenset({"voting_station"})
    for bad in ("election.n", "nowhere.x", "behavior.nope", "strategies.5.p_detect", "roster"):
        with pytest.raises(ValidationError):
            set_path(s, bad, 1)


def test_invalid_sweep_value_rejected():
    s = scenario([0, 1, 0], sweep=[("election.k", [2, 9])])
    with pytest.raises(ValidationError):
        monte_carlo(s)


# -- oracles ---------------------------------------------------------------


def test_decision_table_size():
    assert len(decision_table(4, 2)) == 25
    assert sum(1 for _ in compositions(12, 3)) == math.comb(14, 2)


def test_decision_table_restates_rule():
    for counts, j, kind, winner, reason in decision_table(6, 3):
        ranked = sorted(counts, reverse=True)
        if ranked[0] > ranked[1] and 2 * j < ranked[0] - ranked[1]:
            assert kind == "elected" and counts[winner] == ranked[0]
        else:
            assert kind == "annulled"


def test_oracle_bounds():
    with pytest.raises(BoundTooLarge):
        exhaustive_oracle("decision", n=13)
    with pytest.raises(BoundTooLarge):
        exhaustive_oracle("decision", k=4)
    with pytest.raises(BoundTooLarge):
        exhaustive_oracle("matching", n=8)


def test_matching_oracle_rows_feasible_and_seeded():
    a = exhaustive_oracle("matching", instances=20, seed=4)
    b = exhaustive_oracle("matching", instances=20, seed=4)
    assert a == b
    for row in a:
        assert all(row["sets"][v] for v in row["voters"])
        for v, b_ in row["forced"].items():
            assert row["sets"][v] == {b_}


# -- audit -----------------------------------------------------------------


def test_audit_table_exact_column():
    rows = audit_table({"N": [30], "d": [0, 3], "m": [5]})
    assert rows[0]["exact"] == 0.0
    assert rows[1]["exact"] == pytest.approx(1 - math.comb(27, 5) / math.comb(30, 5))


def test_simulated_audit_close_to_exact():
    r = simulate_audit(20, 3, 5, trials=3000, seed=1)
    assert abs(r["observed"] - pr.detection_probability(20, 3, 5)) < 0.03


def test_full_inspection_always_detects():
    # m = N is impossible while still serving voters, so check the largest legal sample
    r = simulate_audit(8, 5, 5, trials=200)
    assert r["observed"] == pytest.approx(pr.detection_probability(8, 5, 5))


# -- comparison ------------------------------------------------------------


def test_compare_rejects_mismatched_pairs():
    a = scenario([0, 1, 0], trials=5)
    with pytest.raises(MismatchedScenarios):
        compare_protocols(a, a.with_protocol("BVP1"))
    b = scenario([0, 1, 1], trials=5)
    with pytest.raises(MismatchedScenarios):
        compare_protocols(a, b.with_protocol("SPB"))


def test_compare_honest_same_tallies_different_steps():
    s = scenario([0, 0, 1, 0, 1, 1, 0], trials=50)
    out = compare_protocols(s, s.with_protocol("SPB"))
    reps = out["reports"]
    assert reps["BVP1"]["points"][0]["histograms"]["outcome"] == \
        reps["SPB"]["points"][0]["histograms"]["outcome"]
    row = out["points"][0]["protocols"]
    assert row["BVP1"]["steps_per_voter"] != row["SPB"]["steps_per_voter"]


def test_spb_misses_what_bvp1_catches():
    s = scenario([0, 0, 0, 1, 1, 0], [AdversaryStrategy("EAReplacement", target=0, choice=1)], trials=300)
    row = compare_protocols(s, s.with_protocol("SPB"))["points"][0]["protocols"]
    assert row["BVP1"]["undetected_violation"] < 0.05
    assert row["SPB"]["undetected_violation"] > 0.8


def test_peeking_hurts_spb_more():
    s = scenario([0, 0, 0, 1, 1, 0, 1], trials=200)
    s.config.behavior.p_spb_peek = 0.8
    row = compare_protocols(s, s.with_protocol("SPB"))["points"][0]["protocols"]
    assert row["BVP1"]["privacy_breach"] == 0.0
    assert row["SPB"]["disclosure_size"] < row["BVP1"]["disclosure_size"]


# -- reports ---------------------------------------------------------------


def _report():
    s = scenario([0, 1, 0, 1, 0], trials=20, sweep=[("behavior.p_peek", [0.0, 0.4])])
    return monte_carlo(s)


def test_empty_report_is_header_only():
    rep = {"schema_version": 1, "points": []}
    assert emit_report(rep, "table").decode().splitlines() == [
        "# schema_version=1", "point,params,section,metric,count,n,value,lo,hi"]


def test_emit_is_deterministic_and_round_trips():
    rep = _report()
    a = emit_report(rep, "json")
    assert a == emit_report(rep, "json")
    assert emit_report(parse_report(a), "json") == a
    assert emit_report(parse_report(a), "csv") == emit_report(rep, "csv")
    assert json.loads(a)["schema_version"] == 1


def test_unsupported_format():
    with pytest.raises(UnsupportedFormat):
        emit_report(_report(), "xml")


def test_csv_rows_cover_every_rate():
    rep = _report()
    lines = emit_report(rep, "csv").decode().splitlines()
    rate_rows = [line for line in lines if ",rate," in line]
    assert len(rate_rows) == sum(len(p["rates"]) for p in rep["points"])
