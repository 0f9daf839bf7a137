"""Exact best-first search and Complete Anytime Beam Search (CABS).

Both solvers run on one of two interchangeable kernel backends: the compiled
``_speedups`` extension (chosen at import when it is importable and ``n`` fits)
or the pure-Python ``_pysearch`` module. Set ``QTSP_PURE_PYTHON=1`` to force
the fallback.
"""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field

from ..errors import InvalidArgumentError
from ..instance import Instance, Tour, tour_cost
from . import _pysearch
from .model import State, dual_bound, precompute_bound_tables
from .trace import AnytimeTrace, TraceEvent

log = logging.getLogger(__name__)

try:
    if os.environ.get("QTSP_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from . import _speedups
except ImportError:  # pragma: no cover - depends on the build
    _speedups = None

TOL = _pysearch.TOL
BACKENDS = ("auto", "cython", "python")


def available_backends() -> list[str]:
    return ["cython", "python"] if _speedups is not None else ["python"]


def _kernel(backend: str | None, n: int):
    backend = backend or "auto"
    if backend not in BACKENDS:
        raise InvalidArgumentError(f"unknown backend {backend!r}")
    if backend == "python":
        return _pysearch
    if _speedups is not None and n <= _speedups.MAX_N:
        return _speedups
    if backend == "cython":
        raise InvalidArgumentError("compiled kernels unavailable for this build or instance size")
    return _pysearch


@dataclass
class Budget:
    """Search limits. ``None`` means unlimited.

    With ``clock="expansions"`` elapsed time is virtual (``expansions *
    seconds_per_expansion``), which makes traces and time limits reproducible.
    """

    time_limit: float | None = None
    expansion_limit: int | None = None
    node_cap: int | None = None
    clock: str = "wall"
    seconds_per_expansion: float = 1e-6

    def __post_init__(self):
        if self.clock not in ("wall", "expansions"):
            raise InvalidArgumentError(f"unknown clock {self.clock!r}")
        for name in ("time_limit", "expansion_limit", "node_cap"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")


class _Clock:
    def __init__(self, budget: Budget):
        self.budget = budget
        self.start = time.monotonic()

    def now(self, expansions: int) -> float:
        if self.budget.clock == "expansions":
            return expansions * self.budget.seconds_per_expansion
        return time.monotonic() - self.start

    def expired(self, expansions: int) -> bool:
        limit = self.budget.time_limit
        return limit is not None and self.now(expansions) >= limit


@dataclass
class SolveResult:
    tour: Tour | None
    cost: float | None
    status: str
    dual: float
    trace: AnytimeTrace
    expansions: int
    elapsed: float
    solver: str
    backend: str
    memory_out: bool = False
    passes: int = 0
    pass_incumbents: list[float | None] = field(default_factory=list)
    budget_exhausted: bool = False


class _Recorder:
    """Keeps the running primal/dual pair and appends trace events."""

    def __init__(self, inst: Instance, clock: _Clock):
        self.inst = inst
        self.clock = clock
        self.trace = AnytimeTrace()
        self.tour: Tour | None = None
        self.primal: float | None = None
        self.dual = 0.0

    def improve(self, order, seq_cost: float, expansions: int) -> None:
        tour = Tour(order)
        cost = tour_cost(self.inst, tour)
        if self.primal is not None and cost >= self.primal:
            return
        self.tour, self.primal = tour, cost
        self.trace.events.append(TraceEvent(self.clock.now(expansions), cost, self.dual, "incumbent"))

    def bound(self, value: float, expansions: int) -> None:
        if self.primal is not None:
            value = min(value, self.primal)
        if value > self.dual:
            self.dual = value
            self.trace.events.append(TraceEvent(self.clock.now(expansions), self.primal, value, "bound"))

    def finish(self, status: str, expansions: int) -> float:
        if status == "optimal":
            self.dual = max(self.dual, self.primal)
        elapsed = self.clock.now(expansions)
        self.trace.events.append(TraceEvent(elapsed, self.primal, self.dual, "final"))
        self.trace.status = status
        return elapsed


def _limit(v) -> int:
    return -1 if v is None else int(v)


def solve_exact(inst: Instance, budget: Budget | None = None, *, prune: bool = True,
                backend: str | None = None) -> SolveResult:
    """Best-first search over the DP model with duplicate detection.

    With ``prune`` nodes whose priority ``g + dual_bound`` reaches the
    incumbent are discarded and the search stops as soon as the best open
    priority does. Without it every state is expanded.
    """
    budget = budget or Budget()
    kernel = _kernel(backend, inst.n)
    tables = precompute_bound_tables(inst)
    clock = _Clock(budget)
    rec = _Recorder(inst, clock)
    rec.bound(dual_bound(State.root(inst.n), tables), 0)
    code, expansions, _inc, dual = kernel.exact_search(
        inst.costs, tables.in_min, tables.mid_min, tables.out_min, bool(prune), math.inf,
        _limit(budget.node_cap), 0, _limit(budget.expansion_limit),
        clock.expired, rec.improve, rec.bound,
    )
    memory_out = code == _pysearch.MEMORY
    if code == _pysearch.DONE:
        status = "optimal"
    elif rec.tour is None and not memory_out:
        status = "no-solution"
    else:
        status = "out-of-budget"
    if code != _pysearch.DONE:
        rec.bound(dual, expansions)
    elapsed = rec.finish(status, expansions)
    return SolveResult(rec.tour, rec.primal, status, rec.dual, rec.trace, expansions, elapsed,
                       "exact", kernel.NAME, memory_out, budget_exhausted=code != _pysearch.DONE)


def solve_cabs(inst: Instance, budget: Budget | None = None, *, width: int = 1, growth: float = 2.0,
               backend: str | None = None, max_passes: int | None = None) -> SolveResult:
    """Complete Anytime Beam Search.

    Beam passes of width ``width``, ``width * growth``, ... each restart from
    the root. Every pass yields a tour. A pass proves its incumbent optimal
    when no node was dropped for lack of width, or when every dropped node's
    ``g + dual_bound`` already reaches the incumbent.
    """
    if width < 1:
        raise InvalidArgumentError("beam width must be at least 1")
    if not growth > 1:
        raise InvalidArgumentError("growth factor must exceed 1")
    budget = budget or Budget()
    kernel = _kernel(backend, inst.n)
    tables = precompute_bound_tables(inst)
    clock = _Clock(budget)
    rec = _Recorder(inst, clock)
    rec.bound(dual_bound(State.root(inst.n), tables), 0)
    incumbent = math.inf
    expansions = 0
    w = int(width)
    passes = 0
    per_pass: list[float | None] = []
    status = None
    memory_out = False
    exhausted = False
    while status is None:
        code, expansions, incumbent, dropped, min_drop = kernel.cabs_pass(
            inst.costs, tables.in_min, tables.mid_min, tables.out_min, w, incumbent,
            _limit(budget.node_cap), expansions, _limit(budget.expansion_limit),
            clock.expired, rec.improve,
        )
        if code == _pysearch.DONE:
            passes += 1
            per_pass.append(rec.primal)
            log.debug("cabs pass %d width %d: primal %s dropped %s", passes, w, rec.primal, dropped)
            # Dropped nodes bound every tour this pass missed; if none can
            # beat the incumbent, the pass was as good as exhaustive.
            if not dropped or min_drop >= incumbent - TOL:
                status = "optimal"
                break
            rec.bound(min(incumbent, min_drop), expansions)
            if max_passes is not None and passes >= max_passes:
                status = "feasible"
                break
            w = max(w + 1, int(math.ceil(w * growth)))
        elif code == _pysearch.MEMORY:
            memory_out = exhausted = True
            status = "out-of-budget"
        else:
            exhausted = True
            status = "feasible" if rec.tour is not None else "no-solution"
    elapsed = rec.finish(status, expansions)
    return SolveResult(rec.tour, rec.primal, status, rec.dual, rec.trace, expansions, elapsed,
                       "cabs", kernel.NAME, memory_out, passes, per_pass, exhausted)
