"""A small declarative CP text format for the QTSP, with writer and reader.

Grammar (EBNF; ``L = n - 1``, one statement per line)::

    model    = header vars alldiff fix objective { term } table ;
    header   = "cpmodel 1" ;
    vars     = "var x0..x" L " in 0.." L ;
    alldiff  = "alldifferent(x0..x" L ")" ;
    fix      = "x0 = 0" ;
    objective= "minimize sum_element(cost3d, cyclic)" ;
    term     = "  element(cost3d, " var ", " var ", " var ")" ;   (* exactly n *)
    table    = "cost3d " n NEWLINE { entry } "end" ;
    entry    = int " " int " " int " " decimal ;          (* n(n-1)(n-2) rows *)
    var      = "x" int ;

The ``p``-th term (``p = 0..n-1``) reads ``cost3d[x_{p-1}, x_p, x_{p+1}]``
with indices taken cyclically, so the objective is the cyclic sum of all
consecutive triples. Table rows are in ascending ``(i, j, k)`` order with
costs printed to 12 fractional digits; absent entries (repeated indices) are 0.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidArgumentError, ParseError
from ..fileio import format_cost
from ..instance import Instance
from .text import ModelText, VarInfo

HEADER = "cpmodel 1"
OBJECTIVE = "minimize sum_element(cost3d, cyclic)"


def cp_terms(n: int) -> list[tuple[int, int, int]]:
    """Variable indices of the element terms, one per tour position."""
    return [((p - 1) % n, p, (p + 1) % n) for p in range(n)]


def export_cp(inst: Instance) -> ModelText:
    n = inst.n
    if n < 3:
        raise InvalidArgumentError("model export needs n >= 3")
    last = n - 1
    lines = [
        HEADER,
        f"var x0..x{last} in 0..{last}",
        f"alldifferent(x0..x{last})",
        "x0 = 0",
        OBJECTIVE,
    ]
    lines += [f"  element(cost3d, x{a}, x{b}, x{c})" for a, b, c in cp_terms(n)]
    lines.append(f"cost3d {n}")
    c = inst.costs
    lines += [f"{i} {j} {k} {format_cost(c[i, j, k])}" for i, j, k in inst.triples()]
    lines.append("end")
    manifest = [VarInfo(f"x{p}", "integer", (p,)) for p in range(n)]
    return ModelText("cp-text", "\n".join(lines) + "\n", manifest)


@dataclass
class CpModel:
    n: int
    terms: list[tuple[int, int, int]]
    table: np.ndarray

    def evaluate(self, values: Sequence[int]) -> tuple[bool, float | None]:
        """``(feasible, objective)`` for an assignment of ``x0..x{n-1}``."""
        vals = [int(v) for v in values]
        if len(vals) != self.n or any(not 0 <= v < self.n for v in vals):
            return False, None
        feasible = len(set(vals)) == self.n and vals[0] == 0
        obj = math.fsum(float(self.table[vals[a], vals[b], vals[c]]) for a, b, c in self.terms)
        return feasible, obj


_TERM = re.compile(r"^\s*element\(cost3d, x(\d+), x(\d+), x(\d+)\)$")


def parse_cp(text: str, path: str | None = None) -> CpModel:
    lines = text.splitlines()

    def expect(idx: int, want: str):
        got = lines[idx] if idx < len(lines) else "<eof>"
        if got != want:
            raise ParseError(f"expected {want!r}, got {got!r}", idx + 1, path)

    expect(0, HEADER)
    m = re.fullmatch(r"var x0\.\.x(\d+) in 0\.\.(\d+)", lines[1] if len(lines) > 1 else "")
    if not m or m.group(1) != m.group(2):
        raise ParseError("bad variable declaration", 2, path)
    n = int(m.group(1)) + 1
    last = n - 1
    expect(2, f"alldifferent(x0..x{last})")
    expect(3, "x0 = 0")
    expect(4, OBJECTIVE)
    terms = []
    idx = 5
    while idx < len(lines) and (tm := _TERM.match(lines[idx])):
        term = tuple(int(g) for g in tm.groups())
        if any(t >= n for t in term):
            raise ParseError("term refers to an undeclared variable", idx + 1, path)
        terms.append(term)
        idx += 1
    if len(terms) != n:
        raise ParseError(f"expected {n} element terms, found {len(terms)}", idx + 1, path)
    expect(idx, f"cost3d {n}")
    idx += 1
    table = np.zeros((n, n, n))
    seen = set()
    while idx < len(lines) and lines[idx] != "end":
        toks = lines[idx].split()
        try:
            i, j, k = (int(t) for t in toks[:3])
            val = float(toks[3])
        except (ValueError, IndexError):
            raise ParseError(f"bad cost row {lines[idx]!r}", idx + 1, path) from None
        if len(toks) != 4 or not all(0 <= v < n for v in (i, j, k)) or len({i, j, k}) < 3:
            raise ParseError(f"bad cost row {lines[idx]!r}", idx + 1, path)
        if (i, j, k) in seen:
            raise ParseError(f"duplicate cost row for ({i}, {j}, {k})", idx + 1, path)
        seen.add((i, j, k))
        table[i, j, k] = val
        idx += 1
    if idx >= len(lines):
        raise ParseError("missing 'end'", idx + 1, path)
    if len(seen) != n * (n - 1) * (n - 2):
        raise ParseError(f"cost table has {len(seen)} rows, expected {n * (n - 1) * (n - 2)}", idx + 1, path)
    return CpModel(n, terms, table)
