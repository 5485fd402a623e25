"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) or through pytest; the
pytest run repeats the lines in its terminal summary.
"""

import math
import random
import sys
import time
from itertools import combinations

import pytest

from boardroom import events as ev
from boardroom import knowledge as kn
from boardroom import physical as ph
from boardroom import protocol as pr
from boardroom.agents import AdversaryStrategy, Role, VoterProfile
from boardroom.analysis import Scenario, emit_report, honest_roster, monte_carlo, run_trial, simulate_audit
from boardroom.analysis.oracle import decision_table, random_instance
from boardroom.rand import trial_rng

RESULTS: list[str] = []


def record(n, ok, detail, started, limit=None):
    elapsed = time.perf_counter() - started
    within = limit is None or elapsed < limit
    line = f"criterion {n:>2}: {'PASS' if ok and within else 'FAIL'}  {detail}  [{elapsed:.2f} s" + \
        (f" / limit {limit:g} s]" if limit else "]")
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert within, line


def quiet(n, k=2, **kw):
    return pr.ElectionConfig(n, k, physical=pr.PhysicalParams(p_desc=0.0, p_conf=0.0), **kw)


# 1 -------------------------------------------------------------------------


def test_c01_rotation_round_trip():
    t0 = time.perf_counter()
    cases = failures = 0
    for k in range(2, 7):
        for orientation in range(k):
            for choice in range(k):
                cases += 1
                b = ph.rotate(ph.fold(ph.Ballot(f"{k}.{orientation}.{choice}", ph.BallotDesign(k))), orientation)
                cell = ph.cell_for_choice(b.design, b.orientation, choice)
                b = ph.unfold(ph.imprint(b, cell, ph.Stamp(ph.VisualSecret(cases))))
                failures += ph.decode(b) != choice or ph.choice_for_cell(b.design, orientation, cell) != choice
    # every (k, orientation, choice) triple; the 70 non-identity rotations are a subset
    record(1, failures == 0, f"{cases} cases, {failures} failures", t0, limit=1)


# 2 -------------------------------------------------------------------------


def test_c02_honest_completeness():
    t0 = time.perf_counter()
    grid = [(n, k) for n in (3, 10, 22, 40) for k in (2, 3)]
    bad = 0
    trials = 1000
    for t in range(trials):
        n, k = grid[t % len(grid)]
        rng = trial_rng(2024, t)
        prefs = [rng.randrange(k) for _ in range(n)]
        s = pr.simulate_bvp1(quiet(n, k), honest_roster(prefs), rng=rng)
        hist = tuple(prefs.count(c) for c in range(k))
        top = max(hist)
        leaders = [c for c in range(k) if hist[c] == top]
        expected = ("elected", leaders[0]) if len(leaders) == 1 else ("annulled", None)
        bad += s.tallies[0].counts != hist or (s.outcome.kind, s.outcome.winner) != expected
    record(2, bad == 0, f"{trials} trials over n in {{3,10,22,40}}, k in {{2,3}}; {bad} mismatches", t0, limit=5)


# 3 -------------------------------------------------------------------------


def test_c03_decision_rule_oracle():
    t0 = time.perf_counter()
    rows = diffs = 0
    for n in range(1, 13):
        for k in (2, 3):
            for counts, j, kind, winner, reason in decision_table(n, k):
                rows += 1
                out = pr.decide(pr.Tally(counts, n), j)
                diffs += (out.kind, out.winner, out.reason) != (kind, winner, reason)
    record(3, diffs == 0, f"{rows} rows, {diffs} diffs", t0, limit=5)


# 4 -------------------------------------------------------------------------


def _receipt_case(n, victim, liars):
    # published margin 1 (odd n) or 2 (even n) so one objection forces adjudication
    zeros = (n + 3) // 2 if n % 2 else (n + 4) // 2
    others = [v for v in range(n) if v != victim]
    prefs = [1] * n
    prefs[victim] = 0
    for v in others[: zeros - 1]:
        prefs[v] = 0
    strategies = [AdversaryStrategy("EAReplacement", target=victim, choice=1, p_detect=0.0)]
    strategies += [AdversaryStrategy("FalseObjection", actor=a) for a in liars]
    return quiet(n, variants=frozenset({"receipt_ballots"})), honest_roster(prefs), strategies


def _brute_force_valid(state, objectors):
    # an objection stands iff no revealed ballot carries the receipt's pattern and choice
    out = {}
    for v in objectors:
        receipt = state.receipts[v]
        r_choice, r_pats = ph.decode(receipt), ph.patterns(receipt)
        out[v] = not any(ph.decode(b) == r_choice and ph.patterns(b) == r_pats for b in state.revealed[0])
    return out


def test_c04_receipt_adjudication():
    t0 = time.perf_counter()
    cases = diffs = 0
    for n in range(3, 9):
        for victim in range(n):
            others = [v for v in range(n) if v != victim]
            for size in range(4):
                for liars in combinations(others, size):
                    cases += 1
                    config, roster, strategies = _receipt_case(n, victim, liars)
                    s = pr.simulate_bvp1(config, roster, strategies, trial_rng(4, cases))
                    adj = s.adjudication
                    expected = {victim: True, **{a: False for a in liars}}
                    if adj is None or adj.valid != expected or adj.j_valid != 1 or \
                            _brute_force_valid(s, sorted(expected)) != expected:
                        diffs += 1
    record(4, diffs == 0, f"{cases} cases (n<=8, every victim, <=3 false objectors), {diffs} diffs", t0, limit=10)


# 5 -------------------------------------------------------------------------


def test_c05_baseline_privacy():
    t0 = time.perf_counter()
    n = 10
    prefs = [0, 1, 0, 1, 1, 0, 0, 1, 0, 1]
    failures = 0
    for t in range(100):
        s = pr.simulate_bvp1(quiet(n), honest_roster(prefs), rng=trial_rng(5, t))
        pool = s.views[0]
        casters = list(range(n))
        for observer in casters + [ev.EA, ev.OUTSIDER]:
            sets = kn.anonymity_sets(kn.build(s.log, observer), pool, casters)
            for v, positions in sets.items():
                if v == observer:
                    continue
                if positions != set(range(n)) or len({pool[b].choice for b in positions}) < 2:
                    failures += 1
    record(5, failures == 0, f"100 trials, {n + 2} observers each, {failures} failures", t0)


# 6 -------------------------------------------------------------------------


def test_c06_anonymity_oracle():
    t0 = time.perf_counter()
    rng = random.Random(6)
    diffs = 0
    for _ in range(500):
        n = rng.randint(1, 7)
        inst = random_instance(rng, n, rng.randint(2, 3))
        args = (inst["voters"], inst["ballots"], inst["forced"], inst["forbidden"],
                inst["choices"], inst["allowed"])
        diffs += kn.consistent_sets(*args) != kn.brute_force_sets(*args)
    record(6, diffs == 0, f"500 instances (n<=7), {diffs} diffs", t0, limit=30)


# 7 -------------------------------------------------------------------------


def test_c07_scale_soundness():
    t0 = time.perf_counter()
    phys = pr.PhysicalParams(p_desc=0.0, p_conf=0.0, scale_tolerance=1.0, weight_jitter=0.05)
    config = pr.ElectionConfig(4, physical=phys)
    roster = honest_roster([0, 1, 0, 1])
    caught = false_flags = 0
    trials = 10_000
    for t in range(trials):
        s = pr.simulate_bvp1(config, roster, [AdversaryStrategy("DoubleCast", actor=2)], trial_rng(7, t))
        flagged = [e.data[0] for e in s.log.of_kind(ev.MULTIPLE_CAST)]
        caught += 2 in flagged
        false_flags += sum(1 for v in flagged if v != 2)
    ok = caught == trials and false_flags == 0
    record(7, ok, f"double casts caught {caught}/{trials}; honest casts flagged {false_flags}/{3 * trials}", t0)


# 8 -------------------------------------------------------------------------


def _coercion_scenario(p_desc):
    roster = honest_roster([0, 1, 0, 1, 0])
    # voter 1 keeps their own choice and points the coercer at a cover ballot
    roster[1] = VoterProfile(1, 1, 1, Role.COERCED, demand=0, adversary=ev.OUTSIDER, p_desc=p_desc)
    return Scenario(quiet(5), roster, [], trials=10_000, seed=8)


def test_c08_coercion_equivocation():
    t0 = time.perf_counter()
    trials = 10_000
    blind = _coercion_scenario(0.0)
    faithful = _coercion_scenario(1.0)
    blind_caught = sum(run_trial(blind, t).coercion_caught for t in range(trials))
    faithful_caught = sum(run_trial(faithful, t).coercion_caught for t in range(trials))
    ok = blind_caught == 0 and faithful_caught == trials
    record(8, ok, f"no description: caught {blind_caught}/{trials}; faithful description: "
                  f"caught {faithful_caught}/{trials}", t0)


# 9 -------------------------------------------------------------------------

CALIBRATION = [
    ("ChainVoting", dict(actor=0, target=3, choice=0), (), "BVP1"),
    ("DoubleCast", dict(actor=1), (), "SPB"),
    ("EAReplacement", dict(target=2, choice=1), (), "BVP1"),
    ("IdentifyingMark", dict(actor=1), (), "BVP1"),
    ("FeintStamp", dict(actor=4), ("parallel_tally",), "BVP1"),
    ("CorruptEAPremark", dict(count=1), (), "BVP1"),
    ("FalseObjection", dict(actor=5), (), "BVP1"),
    ("CoercionDemand", dict(actor=-2, target=6, choice=0), (), "BVP1"),
]


@pytest.mark.parametrize("kind,kw,variants,protocol", CALIBRATION, ids=[c[0] for c in CALIBRATION])
def test_c09_detection_calibration(kind, kw, variants, protocol):
    t0 = time.perf_counter()
    p = 0.7
    prefs = [0, 1, 0, 1, 0, 0, 1, 0]
    config = pr.ElectionConfig(len(prefs), 2, variants=frozenset(variants))
    s = Scenario(config, honest_roster(prefs), [AdversaryStrategy(kind, p_detect=p, **kw)],
                 protocol=protocol, trials=10_000, seed=99)
    r = monte_carlo(s)["points"][0]["rates"][f"detected:{kind}"]
    ok = r["lo"] <= p <= r["hi"]
    record(9, ok, f"{kind} ({protocol}): observed {r['rate']:.4f}, 95% CI [{r['lo']:.4f}, {r['hi']:.4f}] "
                  f"vs configured {p}", t0)


# 10 ------------------------------------------------------------------------


def test_c10_cut_and_choose():
    t0 = time.perf_counter()
    worst = 0.0
    for N in (20, 30):
        for d in (1, 3):
            for m in (3, 5, 10):
                r = simulate_audit(N, d, m, trials=10_000, seed=10)
                exact = 1 - math.comb(N - d, m) / math.comb(N, m)
                worst = max(worst, abs(r["observed"] - exact))
    record(10, worst <= 0.02, f"12 cells x 10000 trials, worst |observed - exact| = {worst:.4f}", t0)


# 11 ------------------------------------------------------------------------


def test_c11_determinism():
    t0 = time.perf_counter()
    prefs = [0, 1, 0, 1, 0, 0, 1, 1, 0]
    config = pr.ElectionConfig(len(prefs), 2, variants=frozenset({"receipt_ballots"}))
    s = Scenario(config, honest_roster(prefs, p_forget=0.1, p_orient=0.05),
                 [AdversaryStrategy("EAReplacement", choice=1), AdversaryStrategy("IdentifyingMark", actor=3),
                  AdversaryStrategy("FalseObjection", actor=5)],
                 trials=2000, seed=11, sweep=[("behavior.p_peek", [0.0, 0.3])])
    runs = [emit_report(monte_carlo(s, 1)), emit_report(monte_carlo(s, 1)), emit_report(monte_carlo(s, 8))]
    csv = {emit_report(monte_carlo(s, w), "csv") for w in (1, 8)}
    ok = len(set(runs)) == 1 and len(csv) == 1
    record(11, ok, f"2 sweep points x 2000 trials; twice at 1 worker and once at 8: "
                   f"{len(set(runs))} distinct JSON, {len(csv)} distinct CSV", t0)


# 12 ------------------------------------------------------------------------


def test_c12_performance():
    prefs = [i % 2 for i in range(39)] + [0]
    s = Scenario(pr.ElectionConfig(40, 2), honest_roster(prefs), [], trials=100_000, seed=12)
    t0 = time.perf_counter()
    rep = monte_carlo(s, 1)
    n = rep["points"][0]["rates"]["annulled"]["n"]
    record(12, n == 100_000, f"{n} honest trials at n=40, k=2, one worker", t0, limit=60)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
