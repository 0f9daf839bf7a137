"""Variable assignments for the MILP/MIQP/CP models and in-process constraint checks.

MILP variables: ``x[i, j] = 1`` when ``j`` follows ``i``; ``y[i, j, k] = 1`` when
``i, j, k`` are consecutive; ``u[i]`` is the position of customer ``i != 0``
(``u[0]`` is unused and kept at 0). The MIQP model keeps ``x`` and ``u`` only;
the CP model uses the visiting sequence itself.

Objectives add their active terms with :func:`math.fsum`, so they match
:func:`~qtsp.instance.tour_cost` bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import InvalidTourError, ParseError
from ..instance import Instance, _as_order, validate_tour


@dataclass
class MilpAssignment:
    n: int
    x: np.ndarray  # (n, n)
    y: np.ndarray  # (n, n, n)
    u: np.ndarray  # (n,)

    @classmethod
    def zeros(cls, n: int) -> MilpAssignment:
        return cls(n, np.zeros((n, n), dtype=np.int64), np.zeros((n, n, n), dtype=np.int64),
                   np.zeros(n, dtype=np.int64))

    @classmethod
    def from_cycles(cls, n: int, cycles: Sequence[Sequence[int]], positions: dict[int, int] | None = None
                    ) -> MilpAssignment:
        """Assignment whose arcs form the given directed cycles.

        Positions default to the order of appearance within each cycle,
        starting at 1 (customer 0 is skipped).
        """
        a = cls.zeros(n)
        for cyc in cycles:
            m = len(cyc)
            for p in range(m):
                a.x[cyc[p], cyc[(p + 1) % m]] = 1
                a.y[cyc[p - 1], cyc[p], cyc[(p + 1) % m]] = 1
        if positions is None:
            positions = {}
            for cyc in cycles:
                pos = 1
                for v in cyc:
                    if v != 0:
                        positions[v] = pos
                        pos += 1
        for v, p in positions.items():
            a.u[v] = p
        return a


def assignment_from_tour(inst: Instance | int, t) -> MilpAssignment:
    """The unique MILP assignment induced by a valid tour."""
    n = inst if isinstance(inst, int) else inst.n
    order = _as_order(t)
    problems = validate_tour(n, order)
    if problems:
        raise InvalidTourError("; ".join(map(str, problems)))
    return MilpAssignment.from_cycles(n, [order], {v: p for p, v in enumerate(order) if p > 0})


@dataclass(frozen=True)
class ConstraintViolation:
    constraint: str  # degree-out | degree-in | dl | link-out | link-in | binary-x | binary-y | u-bounds
    indices: tuple[int, ...]
    lhs: float
    sense: str
    rhs: float

    @property
    def slack(self) -> float:
        """Signed amount by which the constraint is violated (always positive here)."""
        return abs(self.lhs - self.rhs)

    def __str__(self):
        idx = ",".join(map(str, self.indices))
        return f"{self.constraint}[{idx}]: {self.lhs:g} {self.sense} {self.rhs:g} violated by {self.slack:g}"


@dataclass
class CheckReport:
    feasible: bool
    objective: float | None
    violations: list[ConstraintViolation] = field(default_factory=list)


def _xu_violations(n: int, a: MilpAssignment) -> list[ConstraintViolation]:
    out = []
    x, u = a.x, a.u
    for i in range(n):
        s_out = sum(int(x[i, j]) for j in range(n) if j != i)
        s_in = sum(int(x[j, i]) for j in range(n) if j != i)
        if s_out != 1:
            out.append(ConstraintViolation("degree-out", (i,), s_out, "=", 1))
        if s_in != 1:
            out.append(ConstraintViolation("degree-in", (i,), s_in, "=", 1))
    for i in range(1, n):
        for j in range(1, n):
            if j == i:
                continue
            lhs = int(u[i]) - int(u[j]) + (n - 1) * int(x[i, j]) + (n - 3) * int(x[j, i])
            if lhs > n - 2:
                out.append(ConstraintViolation("dl", (i, j), lhs, "<=", n - 2))
    for i in range(n):
        for j in range(n):
            if j != i and x[i, j] not in (0, 1):
                out.append(ConstraintViolation("binary-x", (i, j), float(x[i, j]), "in", 1))
    for i in range(1, n):
        if not 1 <= u[i] <= n - 1:
            out.append(ConstraintViolation("u-bounds", (i,), float(u[i]), "in", n - 1))
    return out


def check_milp(inst: Instance, a: MilpAssignment) -> CheckReport:
    """Evaluate every degree, subtour-elimination, linking and domain constraint of the MILP."""
    n = inst.n
    v = _xu_violations(n, a)
    x, y = a.x, a.y
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            fwd = sum(int(y[i, j, k]) for k in range(n) if k != i and k != j)
            back = sum(int(y[k, i, j]) for k in range(n) if k != i and k != j)
            if fwd != x[i, j]:
                v.append(ConstraintViolation("link-out", (i, j), fwd, "=", int(x[i, j])))
            if back != x[i, j]:
                v.append(ConstraintViolation("link-in", (i, j), back, "=", int(x[i, j])))
    terms = []
    c = inst.costs
    for i, j, k in inst.triples():
        val = y[i, j, k]
        if val not in (0, 1):
            v.append(ConstraintViolation("binary-y", (i, j, k), float(val), "in", 1))
        if val:
            terms.append(float(c[i, j, k]) * float(val))
    return CheckReport(not v, math.fsum(terms), v)


def eval_miqp_objective(inst: Instance, a: MilpAssignment) -> float:
    """Quadratic objective: sum of ``c[i, j, k] * x[i, j] * x[j, k]``."""
    x = a.x
    c = inst.costs
    terms = []
    for i, j, k in inst.triples():
        if x[i, j] and x[j, k]:
            terms.append(float(c[i, j, k]) * float(x[i, j]) * float(x[j, k]))
    return math.fsum(terms)


def check_miqp(inst: Instance, a: MilpAssignment) -> CheckReport:
    v = _xu_violations(inst.n, a)
    return CheckReport(not v, eval_miqp_objective(inst, a), v)


def eval_cp(inst: Instance, perm: Sequence[int]) -> CheckReport:
    """Check all-different, ``x0 = 0`` and domains; evaluate the element-expression objective."""
    n = inst.n
    seq = [int(v) for v in perm]
    v = []
    if len(seq) != n:
        v.append(ConstraintViolation("length", (), len(seq), "=", n))
    bad = [p for p, val in enumerate(seq) if not 0 <= val < n]
    for p in bad:
        v.append(ConstraintViolation("domain", (p,), seq[p], "in", n - 1))
    if len(set(seq)) != len(seq):
        v.append(ConstraintViolation("alldifferent", (), len(set(seq)), "=", len(seq)))
    if seq and seq[0] != 0:
        v.append(ConstraintViolation("fix-x0", (0,), seq[0], "=", 0))
    if bad or len(seq) != n:
        return CheckReport(False, None, v)
    c = inst.costs
    terms = [float(c[seq[n - 1], seq[0], seq[1]])]
    terms += [float(c[seq[i], seq[i + 1], seq[i + 2]]) for i in range(n - 2)]
    terms.append(float(c[seq[n - 2], seq[n - 1], seq[0]]))
    return CheckReport(not v, math.fsum(terms), v)


# ---------------------------------------------------------------------------
# Assignment files: "assignment <N>" then "x i j v", "y i j k v", "u i v" lines.


def assignment_to_text(a: MilpAssignment) -> str:
    n = a.n
    lines = [f"assignment {n}"]
    for i in range(n):
        for j in range(n):
            if a.x[i, j]:
                lines.append(f"x {i} {j} {int(a.x[i, j])}")
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if a.y[i, j, k]:
                    lines.append(f"y {i} {j} {k} {int(a.y[i, j, k])}")
    for i in range(1, n):
        lines.append(f"u {i} {int(a.u[i])}")
    return "\n".join(lines) + "\n"


def parse_assignment(text: str, path: str | None = None) -> MilpAssignment:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty assignment file", 1, path)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "assignment":
        raise ParseError("expected 'assignment <N>'", 1, path)
    try:
        n = int(head[1])
    except ValueError:
        raise ParseError("bad assignment size", 1, path) from None
    a = MilpAssignment.zeros(n)
    arity = {"x": 2, "y": 3, "u": 1}
    for lineno, line in enumerate(lines[1:], 2):
        toks = line.split()
        if not toks:
            continue
        kind = toks[0]
        if kind not in arity or len(toks) != arity[kind] + 2:
            raise ParseError(f"bad assignment line {line!r}", lineno, path)
        try:
            nums = [int(t) for t in toks[1:]]
        except ValueError:
            raise ParseError(f"non-integer value in {line!r}", lineno, path) from None
        *idx, val = nums
        if any(not 0 <= k < n for k in idx):
            raise ParseError(f"index out of range in {line!r}", lineno, path)
        getattr(a, kind)[tuple(idx)] = val
    return a


def read_assignment(path) -> MilpAssignment:
    p = Path(path)
    return parse_assignment(p.read_text(encoding="utf-8"), str(p))
