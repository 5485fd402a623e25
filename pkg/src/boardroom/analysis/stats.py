"""Wilson score intervals and an exact, mergeable accumulator."""

from __future__ import annotations

import math
from collections import Counter

Z95 = 1.959963984540054


def wilson(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= n:
        raise ValueError("successes outside [0, n]")
    p = successes / n
    z2 = z * z
    denom = 1 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


class Accumulator:
    """Integer tallies only, so merging is associative and commutative."""

    def __init__(self):
        self.trials = 0
        self.rates: dict[str, list[int]] = {}  # name -> [successes, n]
        self.sums: dict[str, list[int]] = {}  # name -> [sum, n]
        self.hists: dict[str, Counter] = {}

    def add(self, metrics):
        self.trials += 1
        rates, sums, hists = self.rates, self.sums, self.hists
        for name, k, n in metrics.rate_items():
            r = rates.get(name)
            if r is None:
                rates[name] = [k, n]
            else:
                r[0] += k
                r[1] += n
        for name, s, n in metrics.sum_items():
            r = sums.get(name)
            if r is None:
                sums[name] = [s, n]
            else:
                r[0] += s
                r[1] += n
        for name, values in metrics.hist_items():
            h = hists.get(name)
            if h is None:
                h = hists[name] = Counter()
            h.update(values)
        return self

    def merge(self, other: "Accumulator") -> "Accumulator":
        out = Accumulator()
        out.trials = self.trials + other.trials
        for src in (self, other):
            for name, (k, n) in src.rates.items():
                r = out.rates.setdefault(name, [0, 0])
                r[0] += k
                r[1] += n
            for name, (s, n) in src.sums.items():
                r = out.sums.setdefault(name, [0, 0])
                r[0] += s
                r[1] += n
            for name, h in src.hists.items():
                out.hists.setdefault(name, Counter()).update(h)
        return out

    def summary(self) -> dict:
        rates = {}
        for name, (k, n) in sorted(self.rates.items()):
            if n:
                lo, hi = wilson(k, n)
                rates[name] = {"count": k, "n": n, "rate": k / n, "lo": lo, "hi": hi}
            else:
                rates[name] = {"count": 0, "n": 0, "rate": None, "lo": None, "hi": None}
        means = {
            name: {"sum": s, "n": n, "mean": (s / n if n else None)}
            for name, (s, n) in sorted(self.sums.items())
        }
        hists = {
            name: {str(v): c for v, c in sorted(h.items(), key=lambda kv: _hist_key(kv[0]))}
            for name, h in sorted(self.hists.items())
        }
        return {"trials": self.trials, "rates": rates, "means": means, "histograms": hists}


def _hist_key(v):
    return (0, v) if isinstance(v, int) else (1, str(v))
