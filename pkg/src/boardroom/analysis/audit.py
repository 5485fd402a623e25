"""Cut-and-choose audit: exact detection probability and a protocol-driven estimate."""

from __future__ import annotations

from .. import protocol as pr
from ..agents import AdversaryStrategy, StrategyKind
from ..rand import trial_rng
from .scenario import honest_roster
from .stats import wilson


def audit_election(N: int, m: int) -> pr.ElectionConfig:
    """An election printing ``N`` ballots that can spare ``m`` for inspection."""
    n = min(pr.MAX_VOTERS, N - m)
    if n < pr.MIN_VOTERS:
        raise ValueError(f"N={N}, m={m} leaves fewer than {pr.MIN_VOTERS} ballots for voters")
    return pr.ElectionConfig(n, 2, extras=N - n, behavior=pr.BehaviorParams(audit_m=m))


def simulate_audit(N: int, d: int, m: int, trials: int, seed: int = 0) -> dict:
    """Run setup ``trials`` times with ``d`` premarked ballots; count failed audits."""
    config = audit_election(N, m)
    roster = honest_roster([i % 2 for i in range(config.n)])
    premark = [AdversaryStrategy(StrategyKind.CORRUPT_EA_PREMARK, count=d)] if d else []
    point = N * 10_000 + d * 100 + m
    hits = 0
    for t in range(trials):
        state = pr.setup(config, roster, premark, trial_rng(seed, t, point), checked=t > 0)
        hits += not state.audit.passed
    lo, hi = wilson(hits, trials)
    return {"trials": trials, "detected": hits, "observed": hits / trials, "lo": lo, "hi": hi}


def audit_table(grid: dict, trials: int = 0, seed: int = 0) -> list[dict]:
    """Exact detection probability for every (N, d, m) in ``grid``, optionally simulated too."""
    rows = []
    for N in grid["N"]:
        for d in grid["d"]:
            for m in grid["m"]:
                if d > N or m > N:
                    continue
                row = {"N": N, "d": d, "m": m, "exact": pr.detection_probability(N, d, m)}
                if trials:
                    row.update(simulate_audit(N, d, m, trials, seed))
                rows.append(row)
    return rows
