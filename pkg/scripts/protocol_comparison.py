"""BVP1 against the simple paper ballot over a range of electorate sizes."""

import argparse

from boardroom.analysis import Scenario, compare_protocols, honest_roster
from boardroom.protocol import BehaviorParams, ElectionConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--peek", type=float, default=0.5, help="SPB teller peek probability")
    args = ap.parse_args()
    print(f"{'n':>3} {'proto':>5} {'breach':>7} {'anon':>6} {'disc':>6} {'steps/voter':>11}")
    for n in (5, 10, 22, 40):
        prefs = [0 if i < (n + 1) // 2 + 1 else 1 for i in range(n)]
        cfg = ElectionConfig(n, 2, behavior=BehaviorParams(p_spb_peek=args.peek))
        base = Scenario(cfg, honest_roster(prefs), trials=args.trials, seed=n)
        out = compare_protocols(base.with_protocol("BVP1"), base.with_protocol("SPB"))
        for proto, m in sorted(out["points"][0]["protocols"].items()):
            print(f"{n:>3} {proto:>5} {m['privacy_breach']:7.3f} {m['anonymity_size']:6.2f} "
                  f"{m['disclosure_size']:6.2f} {m['steps_per_voter']:11.2f}")


if __name__ == "__main__":
    main()
