"""Optimality gap, primal gap and primal integral, plus per-size aggregation.

Gaps are normalised by the primal bound and live in ``[0, 1]``. A run without
a solution has gap 1; ``0 / 0`` (zero-cost primal and bound) counts as gap 0.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .didp.trace import AnytimeTrace
from .errors import InconsistentDataError, InvalidArgumentError

log = logging.getLogger(__name__)

TOL = 1e-9
REPORT_COLUMNS = ("n", "kind", "solver", "mean_opt_gap", "mean_primal_gap", "mean_primal_integral", "count")
RUN_COLUMNS = ("instance", "n", "kind", "solver", "status", "memory", "primal", "dual",
               "opt_gap", "primal_gap", "primal_integral")
MEMORY_STATUSES = ("ok", "memory-out")


def optimality_gap(primal: float | None, dual: float) -> float:
    if dual < 0 or (primal is not None and primal < 0):
        raise InvalidArgumentError("bounds must be nonnegative")
    if primal is None:
        return 1.0
    if dual > primal + TOL:
        raise InconsistentDataError(f"dual bound {dual} exceeds primal bound {primal}")
    if primal == 0:
        return 0.0
    return min(1.0, abs(primal - dual) / primal)


def primal_gap(primal: float | None, best_known: float) -> float:
    if best_known < 0 or (primal is not None and primal < 0):
        raise InvalidArgumentError("bounds must be nonnegative")
    if primal is None:
        return 1.0
    if best_known > primal + TOL:
        raise InconsistentDataError(f"best known {best_known} is worse than primal {primal}")
    if primal == 0:
        return 0.0
    return min(1.0, abs(primal - best_known) / primal)


def primal_integral(trace: AnytimeTrace, best_known: float, horizon: float) -> float:
    """Area under the primal-gap step function on ``[0, horizon]``."""
    if not horizon > 0:
        raise InvalidArgumentError("horizon must be positive")
    times = [e.elapsed for e in trace.events]
    if any(b < a for a, b in zip(times, times[1:])):
        raise InvalidArgumentError("trace events are not sorted by time")
    area = 0.0
    t_prev, gap = 0.0, 1.0
    for t, primal in trace.incumbents():
        t = max(0.0, t)
        if t >= horizon:
            break
        area += gap * (t - t_prev)
        t_prev, gap = t, primal_gap(primal, best_known)
    return area + gap * (horizon - t_prev)


@dataclass
class RunRecord:
    instance: str
    n: int
    kind: str
    solver: str
    trace: AnytimeTrace
    time_limit: float
    memory: str = "ok"

    def __post_init__(self):
        if self.memory not in MEMORY_STATUSES:
            raise InvalidArgumentError(f"unknown memory status {self.memory!r}")
        if not self.time_limit > 0:
            raise InvalidArgumentError("time limit must be positive")

    @property
    def primal(self) -> float | None:
        return self.trace.final_primal

    @property
    def dual(self) -> float:
        return max(0.0, self.trace.final_dual)

    @classmethod
    def from_trace(cls, trace: AnytimeTrace, *, instance: str | None = None, time_limit: float | None = None
                   ) -> RunRecord:
        """Build a record from trace metadata (``instance``, ``n``, ``kind``, ``solver``, ``time_limit``)."""
        meta = trace.meta
        try:
            n = int(meta["n"])
            kind = meta["kind"]
            solver = meta["solver"]
        except KeyError as exc:
            raise InvalidArgumentError(f"trace metadata lacks {exc.args[0]!r}") from None
        limit = time_limit
        if limit is None:
            try:
                limit = float(meta.get("time_limit", "nan"))
            except ValueError:
                limit = math.nan
        if math.isnan(limit) or limit <= 0:
            # Unlimited runs: integrate up to the last event.
            limit = max([e.elapsed for e in trace.events] + [1e-6])
        memory = "memory-out" if meta.get("memory") == "memory-out" else "ok"
        return cls(instance or meta.get("instance", "?"), n, kind, solver, trace, limit, memory)


@dataclass
class RunMetrics:
    record: RunRecord
    opt_gap: float
    primal_gap: float | None
    primal_integral: float | None

    @property
    def flagged(self) -> bool:
        return self.primal_gap is None


def best_known_from_runs(records: Iterable[RunRecord], exact: Mapping[str, float] | None = None) -> dict[str, float]:
    """Best known cost per instance: ``exact`` values first, else the best primal over all runs."""
    best: dict[str, float] = dict(exact or {})
    for r in records:
        if r.instance in (exact or {}) or r.primal is None:
            continue
        best[r.instance] = min(best.get(r.instance, math.inf), r.primal)
    return best


def run_metrics(record: RunRecord, best_known: Mapping[str, float]) -> RunMetrics:
    gap = optimality_gap(record.primal, record.dual)
    bk = best_known.get(record.instance)
    if bk is None:
        log.warning("no best-known value for %s; excluded from primal-gap means", record.instance)
        return RunMetrics(record, gap, None, None)
    return RunMetrics(record, gap, primal_gap(record.primal, bk),
                      primal_integral(record.trace, bk, record.time_limit))


@dataclass
class ReportRow:
    n: int
    kind: str
    solver: str
    mean_opt_gap: float
    mean_primal_gap: float
    mean_primal_integral: float
    count: int
    flagged: list[str] = field(default_factory=list)


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def aggregate_report(records: Iterable[RunRecord], best_known: Mapping[str, float]) -> list[ReportRow]:
    """Means per ``(n, kind, solver)``, sorted by kind, solver and size."""
    groups: dict[tuple[int, str, str], list[RunMetrics]] = defaultdict(list)
    for r in records:
        groups[(r.n, r.kind, r.solver)].append(run_metrics(r, best_known))
    rows = []
    for (n, kind, solver), ms in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0])):
        ok = [m for m in ms if not m.flagged]
        rows.append(ReportRow(
            n, kind, solver,
            _mean([m.opt_gap for m in ms]),
            _mean([m.primal_gap for m in ok]),
            _mean([m.primal_integral for m in ok]),
            len(ms),
            [m.record.instance for m in ms if m.flagged],
        ))
    return rows


def _f(v: float | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return repr(float(v))


def report_to_csv(rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r.n, r.kind, r.solver, _f(r.mean_opt_gap), _f(r.mean_primal_gap),
                    _f(r.mean_primal_integral), r.count])
    return buf.getvalue()


def runs_to_csv(metrics: Iterable[RunMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for m in metrics:
        r = m.record
        w.writerow([r.instance, r.n, r.kind, r.solver, r.trace.status or "", r.memory,
                    _f(r.primal), _f(r.dual), _f(m.opt_gap), _f(m.primal_gap), _f(m.primal_integral)])
    return buf.getvalue()


def report_to_dat(rows: Iterable[ReportRow], metric: str = "mean_opt_gap") -> str:
    """Gnuplot data: one block per ``(kind, solver)`` with ``n value`` lines, blocks split by two blank lines."""
    if metric not in REPORT_COLUMNS[3:6]:
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    blocks: dict[tuple[str, str], list[ReportRow]] = defaultdict(list)
    for r in rows:
        blocks[(r.kind, r.solver)].append(r)
    parts = []
    for (kind, solver), rs in sorted(blocks.items()):
        lines = [f"# kind={kind} solver={solver} metric={metric}", "# n value"]
        lines += [f"{r.n} {_f(getattr(r, metric))}" for r in sorted(rs, key=lambda r: r.n)]
        parts.append("\n".join(lines))
    return "\n\n\n".join(parts) + ("\n" if parts else "")
