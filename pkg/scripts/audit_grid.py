"""Cut-and-choose detection: exact probability vs. simulated draws."""

import argparse

from boardroom.analysis import audit_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    grid = {"N": [20, 30], "d": [1, 3], "m": [3, 5, 10]}
    print(f"{'N':>3} {'d':>2} {'m':>3} {'exact':>8} {'observed':>9}  diff")
    for r in audit_table(grid, args.trials, args.seed):
        diff = r["observed"] - r["exact"]
        print(f"{r['N']:>3} {r['d']:>2} {r['m']:>3} {r['exact']:8.4f} {r['observed']:9.4f}  {diff:+.4f}")


if __name__ == "__main__":
    main()
