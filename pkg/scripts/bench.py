"""Throughput of the honest n=40, k=2 scenario, single process."""

import argparse
import time

from boardroom.analysis import Scenario, honest_roster, monte_carlo
from boardroom.protocol import ElectionConfig


def honest40(trials):
    cfg = ElectionConfig(40, 2)
    return Scenario(cfg, honest_roster([i % 3 % 2 for i in range(40)]), trials=trials, seed=2024)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100_000)
    args = ap.parse_args()
    t0 = time.perf_counter()
    report = monte_carlo(honest40(args.trials))
    dt = time.perf_counter() - t0
    rates = report["points"][0]["rates"]
    print(f"{args.trials} trials in {dt:.1f} s ({1e6 * dt / args.trials:.0f} us/trial)")
    print(f"annulled={rates['annulled']['rate']} integrity_violated={rates['integrity_violated']['rate']}")


if __name__ == "__main__":
    main()
