"""Dynamic-programming model of the QTSP and its native solvers."""

from .model import (
    BoundTables,
    State,
    dual_bound,
    expand,
    precompute_bound_tables,
    reachable_states,
    terminal_cost,
)
from .search import Budget, SolveResult, available_backends, solve_cabs, solve_exact
from .trace import AnytimeTrace, TraceEvent, parse_trace_csv, read_trace, trace_to_csv

__all__ = [
    "AnytimeTrace",
    "BoundTables",
    "Budget",
    "SolveResult",
    "State",
    "TraceEvent",
    "available_backends",
    "dual_bound",
    "expand",
    "parse_trace_csv",
    "precompute_bound_tables",
    "reachable_states",
    "read_trace",
    "solve_cabs",
    "solve_exact",
    "terminal_cost",
    "trace_to_csv",
]
