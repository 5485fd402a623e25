"""Command-line entry point: ``boardroom <subcommand> [options]``.

Exit status is 0 on success, 1 for unusable input (bad flags, malformed
or invalid scenario files) and 2 when a run fails.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from . import __version__
from .analysis import compare_protocols, emit_report, exhaustive_oracle, monte_carlo
from .analysis.runner import SCHEMA_VERSION
from .analysis.audit import audit_table
from .errors import (
    BoardroomError,
    InvalidConfig,
    ParseError,
    StrategyPreconditionFailed,
    ValidationError,
)
from .scenario_file import SCHEMA, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
INPUT_ERRORS = (ParseError, ValidationError, InvalidConfig, StrategyPreconditionFailed)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n(see `boardroom schema` for the scenario format)")


def _range(text: str) -> list[int]:
    """``5``, ``1..10`` or ``1,3,5`` -> list of ints."""
    out = []
    for part in text.split(","):
        m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?", part)
        if not m:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        lo = int(m.group(1))
        hi = int(m.group(2)) if m.group(2) else lo
        out.extend(range(lo, hi + 1))
    return out


def _grid(items: list[str]) -> dict[str, list[int]]:
    grid = {"N": [30], "d": [1], "m": [5]}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or key not in grid:
            raise UsageError(f"grid entries look like N=30 d=0..5 m=1..10, not {item!r}")
        try:
            grid[key] = _range(value)
        except argparse.ArgumentTypeError as e:
            raise UsageError(str(e)) from None
    return grid


def _write(data: bytes, out):
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _scenario(args):
    s = load_scenario(args.scenario)
    if args.seed is not None:
        s.seed = args.seed
    if args.trials is not None:
        s.trials = args.trials
    return s


def _fmt(args):
    return "json" if args.format == "json" else "csv"


# -- subcommands ------------------------------------------------------------


def cmd_run(args):
    s = _scenario(args)
    s.sweep = []
    _write(emit_report(monte_carlo(s, args.workers), _fmt(args)), args.out)


def cmd_sweep(args):
    s = _scenario(args)
    if not s.sweep:
        raise ValidationError("run.sweep", "the sweep subcommand needs at least one sweep axis")
    _write(emit_report(monte_carlo(s, args.workers), _fmt(args)), args.out)


def cmd_compare(args):
    s = _scenario(args)
    a, b = s.with_protocol("BVP1"), s.with_protocol("SPB")
    report = compare_protocols(a, b, args.workers)
    if args.format == "json":
        _write(emit_report(report, "json"), args.out)
        return
    rows = ["point,params,protocol,metric,value"]
    for pt in report["points"]:
        params = ";".join(f"{k}={v}" for k, v in sorted(pt["params"].items()))
        for proto, metrics in sorted(pt["protocols"].items()):
            for name, value in sorted(metrics.items()):
                rows.append(f"{pt['index']},{params},{proto},{name},{'' if value is None else f'{value:.9g}'}")
    _write(("\n".join(rows) + "\n").encode(), args.out)


def cmd_audit(args):
    rows = audit_table(_grid(args.grid), args.trials or 0, args.seed or 0)
    if args.format == "json":
        _write(emit_report({"schema_version": SCHEMA_VERSION, "audit": rows}, "json"), args.out)
        return
    cols = ["N", "d", "m", "exact"] + (["trials", "detected", "observed", "lo", "hi"] if args.trials else [])
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(f"{r[c]:.9g}" if isinstance(r[c], float) else str(r[c]) for c in cols))
    _write(("\n".join(lines) + "\n").encode(), args.out)


def cmd_oracle(args):
    if args.kind == "decision":
        tables = exhaustive_oracle("decision", n=args.n, k=args.k)
        rows = [
            {"n": n, "k": k, "counts": list(c), "j": j, "kind": kind, "winner": w, "reason": r}
            for (n, k), table in sorted(tables.items())
            for c, j, kind, w, r in table
        ]
    else:
        table = exhaustive_oracle("matching", n=args.n, instances=args.instances, seed=args.seed or 0)
        rows = [
            {
                "voters": inst["voters"],
                "ballots": inst["ballots"],
                "forced": sorted(inst["forced"].items()),
                "forbidden": sorted(inst["forbidden"]),
                "choices": {str(v): sorted(c) for v, c in sorted(inst["choices"].items())},
                "allowed": {str(v): sorted(a) for v, a in sorted(inst["allowed"].items())},
                "sets": {str(v): sorted(s) for v, s in sorted(inst["sets"].items())},
            }
            for inst in table
        ]
    if args.format == "json":
        _write(emit_report({"schema_version": SCHEMA_VERSION, "oracle": args.kind, "rows": rows},
                           "json"), args.out)
        return
    cols = list(rows[0]) if rows else []
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(json.dumps(r[c], sort_keys=True, separators=(" ", ":")).replace(",", " ")
                              if not isinstance(r[c], (int, str)) or r[c] is None else str(r[c])
                              for c in cols))
    _write(("\n".join(lines) + "\n").encode(), args.out)


def cmd_schema(args):
    _write((json.dumps(SCHEMA, indent=2, sort_keys=True) + "\n").encode(), args.out)


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boardroom", description="Boardroom voting simulator and analysis harness")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, metavar="PATH", help="scenario file (YAML)")
        p.add_argument("--seed", type=int, metavar="U64", help="override the master seed")
        p.add_argument("--trials", type=int, metavar="N", help="override the trial count")
        p.add_argument("--format", choices=["json", "table"], default="json")
        p.add_argument("--out", metavar="PATH", help="write here instead of stdout")
        p.add_argument("--workers", type=int, default=1, metavar="N",
                       help="worker processes (never changes the output)")

    p = sub.add_parser("run", help="Monte Carlo over one scenario (sweep axes ignored)")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="Monte Carlo over every sweep point")
    common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("compare", help="the scenario under BVP1 and under SPB")
    common(p)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("audit", help="cut-and-choose detection probability table")
    common(p, scenario=False)
    p.add_argument("--grid", nargs="+", default=[], metavar="X=RANGE",
                   help="e.g. N=30 d=0..5 m=1..10")
    p.set_defaults(func=cmd_audit)
    p = sub.add_parser("oracle", help="exhaustive reference tables")
    common(p, scenario=False)
    p.add_argument("--kind", choices=["decision", "matching"], default="decision")
    p.add_argument("--n", type=int, help="size bound (decision: 12, matching: 7)")
    p.add_argument("--k", type=int, help="arity bound for the decision table (max 3)")
    p.add_argument("--instances", type=int, default=500)
    p.set_defaults(func=cmd_oracle)
    p = sub.add_parser("schema", help="print the scenario-file JSON schema")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) < 1 or (getattr(args, "trials", None) or 1) < 1:
            raise UsageError("--workers and --trials must be positive")
        args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    except INPUT_ERRORS as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID if getattr(e, "filename", None) else EXIT_RUNTIME
    except BoardroomError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - any crash is a runtime failure
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
