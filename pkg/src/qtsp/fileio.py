"""Text formats for instances and solutions, plus atomic file writes.

Instance file::

    qtsp 1
    kind angle | kind angledistance rho=<decimal> [round=12] | kind explicit
    n <N>
    [seed <u64>]
    points            (point kinds: N lines "<x> <y>")
    costs             (explicit: N(N-1)(N-2) lines "<i> <j> <k> <c>")

Solution file::

    tour <N>
    0 <customer> ...
    cost <decimal>
"""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError
from .instance import GRID_MAX, Instance, Tour

log = logging.getLogger(__name__)

# Read coordinates must fit this range; products stay exact in extended precision.
COORD_LIMIT = 10**6


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temp file in the same directory and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_cost(c: float) -> str:
    return format(float(c), ".12f")


def format_rho(rho: float) -> str:
    r = repr(float(rho))
    return r[:-2] if r.endswith(".0") else r


def instance_to_text(inst: Instance) -> str:
    lines = ["qtsp 1"]
    if inst.kind == "angledistance":
        lines.append(f"kind angledistance rho={format_rho(inst.rho)} round=12")
    else:
        lines.append(f"kind {inst.kind}")
    lines.append(f"n {inst.n}")
    if inst.seed is not None:
        lines.append(f"seed {inst.seed}")
    if inst.points is not None:
        lines.append("points")
        lines.extend(f"{x} {y}" for x, y in inst.points)
    else:
        lines.append("costs")
        c = inst.costs
        lines.extend(f"{i} {j} {k} {format_cost(c[i, j, k])}" for i, j, k in inst.triples())
    return "\n".join(lines) + "\n"


def write_instance(inst: Instance, path) -> Path:
    return atomic_write_text(path, instance_to_text(inst))


def _int(tok: str, lineno: int, what: str, path) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", lineno, path) from None


def parse_instance(text: str, path: str | None = None) -> Instance:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def take(expect: str) -> list[str]:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"unexpected end of file, expected {expect}", pos + 1, path)
        toks = lines[pos].split()
        pos += 1
        return toks

    toks = take("header")
    if toks != ["qtsp", "1"]:
        raise ParseError(f"bad header {' '.join(toks)!r}, expected 'qtsp 1'", 1, path)

    toks = take("kind line")
    if not toks or toks[0] != "kind" or len(toks) < 2:
        raise ParseError("expected 'kind <angle|angledistance|explicit>'", pos, path)
    kind = toks[1]
    rho = None
    opts = {}
    for t in toks[2:]:
        key, sep, val = t.partition("=")
        if not sep:
            raise ParseError(f"bad kind option {t!r}", pos, path)
        opts[key] = val
    if kind == "angledistance":
        if "rho" not in opts:
            raise ParseError("angledistance kind requires rho=<decimal>", pos, path)
        raw = opts.pop("rho")
        try:
            rho = float(raw)
        except ValueError:
            raise ParseError(f"bad rho value {raw!r}", pos, path) from None
        if not rho >= 0 or rho == float("inf"):
            raise ParseError(f"rho must be finite and nonnegative, got {raw}", pos, path)
        if opts.pop("round", "12") != "12":
            raise ParseError("only round=12 is supported", pos, path)
    elif kind not in ("angle", "explicit"):
        raise ParseError(f"unknown kind {kind!r}", pos, path)
    if opts:
        raise ParseError(f"unexpected kind options {sorted(opts)}", pos, path)

    toks = take("'n <N>'")
    if len(toks) != 2 or toks[0] != "n":
        raise ParseError("expected 'n <N>'", pos, path)
    n = _int(toks[1], pos, "customer count", path)
    if n < 3:
        raise ParseError(f"n must be at least 3, got {n}", pos, path)

    seed = None
    toks = take("'seed' or data section")
    if toks and toks[0] == "seed":
        if len(toks) != 2:
            raise ParseError("expected 'seed <u64>'", pos, path)
        seed = _int(toks[1], pos, "seed", path)
        if not 0 <= seed < 2**64:
            raise ParseError(f"seed out of u64 range: {seed}", pos, path)
        toks = take("data section")

    if kind == "explicit":
        if toks != ["costs"]:
            raise ParseError("explicit instances need a 'costs' section", pos, path)
        expected = n * (n - 1) * (n - 2)
        body = lines[pos:]
        if len(body) != expected:
            raise ParseError(
                f"expected {expected} cost lines for n={n}, found {len(body)}"
                f" ({'missing ' + str(expected - len(body)) if len(body) < expected else 'extra ' + str(len(body) - expected)})",
                pos + min(len(body), expected) + 1,
                path,
            )
        costs = np.zeros((n, n, n), dtype=np.float64)
        seen = np.zeros((n, n, n), dtype=bool)
        for off, line in enumerate(body):
            lineno = pos + off + 1
            parts = line.split()
            if len(parts) != 4:
                raise ParseError("expected '<i> <j> <k> <cost>'", lineno, path)
            i, j, k = (_int(p, lineno, "index", path) for p in parts[:3])
            if not (0 <= i < n and 0 <= j < n and 0 <= k < n) or len({i, j, k}) != 3:
                raise ParseError(f"invalid triple ({i}, {j}, {k}) for n={n}", lineno, path)
            if seen[i, j, k]:
                raise ParseError(f"duplicate triple ({i}, {j}, {k})", lineno, path)
            try:
                c = float(parts[3])
            except ValueError:
                raise ParseError(f"bad cost value {parts[3]!r}", lineno, path) from None
            if not np.isfinite(c) or c < 0:
                raise ParseError(f"cost must be finite and nonnegative, got {parts[3]}", lineno, path)
            seen[i, j, k] = True
            costs[i, j, k] = c
        return Instance(n=n, kind="explicit", costs=costs, seed=seed)

    if toks != ["points"]:
        raise ParseError(f"{kind} instances need a 'points' section", pos, path)
    body = lines[pos:]
    if len(body) != n:
        diff = n - len(body)
        what = f"{diff} point(s) missing" if diff > 0 else f"{-diff} extra point line(s)"
        raise ParseError(f"header declares n={n} but found {len(body)} point lines: {what}", pos + len(body) + 1, path)
    pts = []
    for off, line in enumerate(body):
        lineno = pos + off + 1
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected '<x> <y>'", lineno, path)
        x, y = (_int(p, lineno, "coordinate", path) for p in parts)
        if abs(x) > COORD_LIMIT or abs(y) > COORD_LIMIT:
            raise ParseError(f"coordinate ({x}, {y}) outside [-{COORD_LIMIT}, {COORD_LIMIT}]", lineno, path)
        pts.append((x, y))
    if len(set(pts)) != len(pts):
        raise ParseError("points must be pairwise distinct", None, path)
    inst = Instance.from_points(pts, kind=kind, rho=rho, seed=seed)
    if not inst.on_grid:
        log.warning("%s: points lie outside the 0..%d grid; bound check skipped", path or "<text>", GRID_MAX)
    return inst


def read_instance(path) -> Instance:
    p = Path(path)
    return parse_instance(p.read_text(encoding="utf-8"), str(p))


# ---------------------------------------------------------------------------
# Solutions


@dataclass(frozen=True)
class Solution:
    order: tuple[int, ...]
    cost: float | None

    @property
    def tour(self) -> Tour:
        return Tour(self.order)


def solution_to_text(tour, cost: float) -> str:
    order = tuple(tour)
    return f"tour {len(order)}\n{' '.join(map(str, order))}\ncost {format_cost(cost)}\n"


def write_solution(tour, cost: float, path) -> Path:
    return atomic_write_text(path, solution_to_text(tour, cost))


def parse_solution(text: str, path: str | None = None) -> Solution:
    """Parse a solution file. The order is not validated here (see ``validate_tour``)."""
    lines = [ln for ln in text.split("\n")]
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty solution file", 1, path)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "tour":
        raise ParseError("expected 'tour <N>'", 1, path)
    n = _int(head[1], 1, "tour length", path)
    if len(lines) < 2:
        raise ParseError("missing tour line", 2, path)
    order = tuple(_int(t, 2, "customer", path) for t in lines[1].split())
    if len(order) != n:
        log.warning("%s: header declares %d customers, tour line has %d", path or "<text>", n, len(order))
    cost = None
    if len(lines) >= 3:
        toks = lines[2].split()
        if len(toks) != 2 or toks[0] != "cost":
            raise ParseError("expected 'cost <decimal>'", 3, path)
        try:
            cost = float(toks[1])
        except ValueError:
            raise ParseError(f"bad cost {toks[1]!r}", 3, path) from None
    if len(lines) > 3:
        raise ParseError("unexpected trailing lines", 4, path)
    return Solution(order=order, cost=cost)


def read_solution(path) -> Solution:
    p = Path(path)
    return parse_solution(p.read_text(encoding="utf-8"), str(p))
