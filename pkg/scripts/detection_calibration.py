"""Observed detection rate of each attack against its configured probability."""

import argparse

from boardroom.analysis import Scenario, honest_roster, monte_carlo, strategy
from boardroom.protocol import ElectionConfig

PREFS = [0, 1, 0, 1, 0, 0, 1, 0]

CASES = [
    ("ChainVoting", dict(actor=0, target=3, choice=0), frozenset()),
    ("EAReplacement", dict(target=2, choice=1), frozenset()),
    ("IdentifyingMark", dict(actor=1), frozenset()),
    ("FeintStamp", dict(actor=4), frozenset({"parallel_tally"})),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--p", type=float, default=0.7)
    args = ap.parse_args()
    for kind, kw, variants in CASES:
        cfg = ElectionConfig(len(PREFS), 2, variants=variants)
        s = Scenario(cfg, honest_roster(PREFS), [strategy(kind, p_detect=args.p, **kw)],
                     trials=args.trials, seed=99)
        r = monte_carlo(s)["points"][0]["rates"][f"detected:{kind}"]
        inside = r["lo"] <= args.p <= r["hi"]
        print(f"{kind:16} observed {r['rate']:.4f}  95% CI [{r['lo']:.4f}, {r['hi']:.4f}]  "
              f"{'ok' if inside else 'MISS'}")


if __name__ == "__main__":
    main()
