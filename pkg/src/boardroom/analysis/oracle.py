"""Exhaustive small-scope reference tables.

These restate the rules independently of the production code (fractions
instead of doubled integers, permutation enumeration instead of
matching) so the test suite can diff the two.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

from ..errors import BoundTooLarge
from ..knowledge import brute_force_sets

DECISION_MAX_N, DECISION_MAX_K = 12, 3
MATCHING_MAX_N = 7


def compositions(total: int, k: int):
    """Every count vector of length ``k`` summing to ``total``."""
    for head in product(range(total + 1), repeat=k - 1):
        rest = total - sum(head)
        if rest >= 0:
            yield (*head, rest)


def decision_row(counts, j):
    top = max(counts)
    leaders = [c for c, x in enumerate(counts) if x == top]
    if len(leaders) > 1:
        return ("annulled", None, "tie")
    runner_up = max((x for c, x in enumerate(counts) if c != leaders[0]), default=0)
    if Fraction(j) < Fraction(top - runner_up, 2):
        return ("elected", leaders[0], None)
    return ("annulled", None, "objection-threshold")


def decision_table(n: int, k: int) -> list[tuple]:
    """Rows ``(counts, j, kind, winner, reason)`` for every vector summing to n."""
    if n > DECISION_MAX_N or k > DECISION_MAX_K:
        raise BoundTooLarge(f"decision oracle bound is n <= {DECISION_MAX_N}, k <= {DECISION_MAX_K}")
    if n < 1 or k < 2:
        raise ValueError("need n >= 1 and k >= 2")
    return [(c, j, *decision_row(c, j)) for c in compositions(n, k) for j in range(n + 1)]


def random_instance(rng: random.Random, n: int, k: int = 2) -> dict:
    """A constraint instance that is feasible by construction.

    A hidden assignment is drawn first and every constraint is made
    consistent with it, as an observer's knowledge always is.
    """
    ballots = [rng.randrange(k) for _ in range(n)]
    truth = list(range(n))
    rng.shuffle(truth)  # voter v holds ballot truth[v]
    voters = list(range(n))
    forced, forbidden, choices, allowed = {}, set(), {}, {}
    for v in voters:
        r = rng.random()
        if r < 0.15:
            forced[v] = truth[v]
        elif r < 0.35:
            choices[v] = frozenset({ballots[truth[v]]})
        elif r < 0.5:
            extra = rng.sample(range(n), rng.randrange(n))
            allowed[v] = frozenset({truth[v], *extra})
    for _ in range(rng.randrange(n + 1)):
        v, b = rng.randrange(n), rng.randrange(n)
        if truth[v] != b:
            forbidden.add((v, b))
    return {"voters": voters, "ballots": ballots, "forced": forced, "forbidden": forbidden,
            "choices": choices, "allowed": allowed}


def matching_table(instances: int, seed: int = 0, n_max: int = MATCHING_MAX_N) -> list[dict]:
    """Seeded random instances with their brute-force anonymity sets."""
    if n_max > MATCHING_MAX_N:
        raise BoundTooLarge(f"matching oracle enumerates n! assignments; n <= {MATCHING_MAX_N}")
    rng = random.Random(seed)
    rows = []
    for _ in range(instances):
        n = rng.randint(1, n_max)
        inst = random_instance(rng, n, rng.randint(2, 3))
        inst["sets"] = brute_force_sets(**inst)
        rows.append(inst)
    return rows


def exhaustive_oracle(kind: str = "decision", *, n: int | None = None, k: int | None = None,
                      instances: int = 500, seed: int = 0):
    """Reference tables: ``decision`` for every (n' <= n, k' <= k), or ``matching``."""
    if kind == "decision":
        n = DECISION_MAX_N if n is None else n
        k = DECISION_MAX_K if k is None else k
        if n > DECISION_MAX_N or k > DECISION_MAX_K:
            raise BoundTooLarge(f"decision oracle bound is n <= {DECISION_MAX_N}, k <= {DECISION_MAX_K}")
        return {(nn, kk): decision_table(nn, kk) for nn in range(1, n + 1) for kk in range(2, k + 1)}
    if kind == "matching":
        return matching_table(instances, seed, MATCHING_MAX_N if n is None else n)
    raise ValueError(f"unknown oracle {kind!r}")
