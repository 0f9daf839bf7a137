"""Anytime traces: time-stamped primal/dual bound events and their CSV form."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ParseError

STATUSES = ("optimal", "feasible", "no-solution", "out-of-budget")
EVENTS = ("incumbent", "bound", "final")
COLUMNS = "elapsed_s,primal,dual,event"


@dataclass(frozen=True)
class TraceEvent:
    elapsed: float
    primal: float | None
    dual: float
    event: str


@dataclass
class AnytimeTrace:
    events: list[TraceEvent] = field(default_factory=list)
    status: str | None = None
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def final_primal(self) -> float | None:
        return self.events[-1].primal if self.events else None

    @property
    def final_dual(self) -> float:
        return self.events[-1].dual if self.events else 0.0

    def incumbents(self) -> list[tuple[float, float]]:
        """``(time, primal)`` at each improvement of the primal bound."""
        out = []
        last = math.inf
        for e in self.events:
            if e.primal is not None and e.primal < last:
                out.append((e.elapsed, e.primal))
                last = e.primal
        return out

    def check(self, tol: float = 1e-9) -> list[str]:
        """Violated trace invariants (empty when the trace is well formed)."""
        problems = []
        prev = None
        for idx, e in enumerate(self.events):
            if e.event not in EVENTS:
                problems.append(f"event {idx}: unknown kind {e.event!r}")
            if e.dual < 0:
                problems.append(f"event {idx}: negative dual {e.dual}")
            if e.primal is not None and e.dual > e.primal + tol:
                problems.append(f"event {idx}: dual {e.dual} above primal {e.primal}")
            if prev is not None:
                if e.elapsed < prev.elapsed:
                    problems.append(f"event {idx}: time goes backwards")
                if prev.primal is not None and (e.primal is None or e.primal > prev.primal):
                    problems.append(f"event {idx}: primal increased")
                if e.dual < prev.dual:
                    problems.append(f"event {idx}: dual decreased")
            prev = e
        if self.status == "optimal":
            if not self.events or self.final_primal is None or abs(self.final_primal - self.final_dual) > tol:
                problems.append("status optimal but final primal and dual differ")
        return problems


def _fmt(v: float | None) -> str:
    if v is None or math.isinf(v):
        return "inf"
    return format(v, ".12f")


def _fmt_time(t: float) -> str:
    return format(t, ".6f")


def trace_to_csv(trace: AnytimeTrace) -> str:
    buf = io.StringIO()
    meta = dict(trace.meta)
    if trace.status is not None:
        meta["status"] = trace.status
    for key in sorted(meta):
        buf.write(f"# {key}={meta[key]}\n")
    buf.write(COLUMNS + "\n")
    for e in trace.events:
        buf.write(f"{_fmt_time(e.elapsed)},{_fmt(e.primal)},{_fmt(e.dual)},{e.event}\n")
    return buf.getvalue()


def parse_trace_csv(text: str, path: str | None = None) -> AnytimeTrace:
    meta: dict[str, str] = {}
    events = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        if not header_seen:
            if line.strip() != COLUMNS:
                raise ParseError(f"expected header {COLUMNS!r}", lineno, path)
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError("expected 4 columns", lineno, path)
        try:
            t = float(parts[0])
            primal = float(parts[1])
            dual = float(parts[2])
        except ValueError:
            raise ParseError("non-numeric trace value", lineno, path) from None
        if parts[3] not in EVENTS:
            raise ParseError(f"unknown event {parts[3]!r}", lineno, path)
        events.append(TraceEvent(t, None if math.isinf(primal) else primal, dual, parts[3]))
    if not header_seen:
        raise ParseError("missing trace header", None, path)
    status = meta.pop("status", None)
    return AnytimeTrace(events=events, status=status, meta=meta)


def read_trace(path) -> AnytimeTrace:
    p = Path(path)
    return parse_trace_csv(p.read_text(encoding="utf-8"), str(p))
