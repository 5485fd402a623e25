from .audit import audit_table, simulate_audit
from .compare import compare_protocols
from .oracle import exhaustive_oracle
from .report import emit_report, parse_report
from .runner import SCHEMA_VERSION, RunMetrics, monte_carlo, run_trial, score
from .scenario import Scenario, honest_roster, set_path, strategy
from .stats import Accumulator, wilson

__all__ = [
    "Accumulator",
    "RunMetrics",
    "SCHEMA_VERSION",
    "Scenario",
    "audit_table",
    "compare_protocols",
    "emit_report",
    "exhaustive_oracle",
    "honest_roster",
    "monte_carlo",
    "parse_report",
    "run_trial",
    "score",
    "set_path",
    "simulate_audit",
    "strategy",
    "wilson",
]
