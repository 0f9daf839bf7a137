"""LP-file writer, reader and evaluator, plus the MILP and MIQP exporters.

The dialect is the common ``Minimize / Subject To / Bounds / Binaries /
Generals / End`` text format. Quadratic objective terms sit inside ``[ ]`` as
explicit products ``c x_i_j * x_j_k`` with coefficients written as-is (no
halving convention).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from ..errors import InvalidArgumentError, ParseError
from ..fileio import format_cost
from ..instance import Instance
from .text import ModelText, VarInfo

SUBTOUR_FORMS = ("dl", "mtz", "flow")
SENSES = ("<=", ">=", "=")
WRAP = 78


@dataclass
class Constraint:
    name: str
    terms: list[tuple[float, str]]
    sense: str
    rhs: float


@dataclass
class LpModel:
    linear: list[tuple[float, str]] = field(default_factory=list)
    quadratic: list[tuple[float, str, str]] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    binaries: list[str] = field(default_factory=list)
    generals: list[str] = field(default_factory=list)
    continuous: list[str] = field(default_factory=list)

    @property
    def variables(self) -> list[str]:
        return self.binaries + self.generals + self.continuous

    def objective(self, values: dict[str, float]) -> float:
        terms = [c * values.get(v, 0.0) for c, v in self.linear]
        terms += [c * values.get(a, 0.0) * values.get(b, 0.0) for c, a, b in self.quadratic]
        return math.fsum(terms)

    def violations(self, values: dict[str, float], tol: float = 1e-9) -> list[str]:
        out = []
        for con in self.constraints:
            lhs = math.fsum(c * values.get(v, 0.0) for c, v in con.terms)
            ok = {"<=": lhs <= con.rhs + tol, ">=": lhs >= con.rhs - tol,
                  "=": abs(lhs - con.rhs) <= tol}[con.sense]
            if not ok:
                out.append(f"{con.name}: {lhs:g} {con.sense} {con.rhs:g}")
        for v in self.variables:
            val = values.get(v, 0.0)
            lo, hi = self.bounds.get(v, (0.0, 1.0 if v in self._binset else math.inf))
            if val < lo - tol or val > hi + tol:
                out.append(f"bound {v}: {val:g} outside [{lo:g}, {hi:g}]")
            if v not in self._contset and abs(val - round(val)) > tol:
                out.append(f"integrality {v}: {val:g}")
        return out

    @property
    def _binset(self):
        return set(self.binaries)

    @property
    def _contset(self):
        return set(self.continuous)


def _num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _wrap(head: str, tokens: list[str]) -> list[str]:
    lines = []
    cur = head
    for tok in tokens:
        if len(cur) + 1 + len(tok) > WRAP and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    lines.append(cur)
    return lines


def _linear_tokens(terms) -> list[str]:
    toks = []
    for idx, (c, v) in enumerate(terms):
        coef = _coef(abs(c)) + v
        if idx == 0:
            toks.append(f"-{coef}" if c < 0 else coef)
        else:
            toks.append(f"{'-' if c < 0 else '+'} {coef}")
    return toks


def _coef(mag: float) -> str:
    if mag == 1:
        return ""
    return f"{_num(mag) if float(mag).is_integer() else format_cost(mag)} "


def write_lp(model: LpModel, comment: str | None = None) -> str:
    out = []
    if comment:
        out.append(f"\\ {comment}")
    out.append("Minimize")
    toks = []
    # Cost coefficients keep their full 12 fractional digits even when integral.
    for idx, (c, v) in enumerate(model.linear):
        toks.append(("" if idx == 0 else "+ ") + f"{format_cost(c)} {v}")
    if model.quadratic:
        toks.append("+ [" if toks else "[")
        for idx, (c, a, b) in enumerate(model.quadratic):
            toks.append(("" if idx == 0 else "+ ") + f"{format_cost(c)} {a} * {b}")
        toks.append("]")
    if not toks:
        toks = ["0"]
    out.extend(_wrap(" obj:", toks))
    out.append("Subject To")
    for con in model.constraints:
        body = _linear_tokens(con.terms)
        body += [con.sense, _num(con.rhs)]
        out.extend(_wrap(f" {con.name}:", body))
    if model.bounds:
        out.append("Bounds")
        for v, (lo, hi) in model.bounds.items():
            if math.isinf(hi):
                out.append(f" {v} >= {_num(lo)}")
            else:
                out.append(f" {_num(lo)} <= {v} <= {_num(hi)}")
    if model.binaries:
        out.append("Binaries")
        out.extend(_wrap("", model.binaries))
    if model.generals:
        out.append("Generals")
        out.extend(_wrap("", model.generals))
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Reader

_SECTIONS = {
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen", "end": "end",
}
_TOKEN = re.compile(r"<=|>=|=<|=>|[-+*\[\]:=<>]|[^\s\-+*\[\]:=<>]+")


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _parse_expr(tokens: list[str], lineno: int, path):
    """Parse ``[+-] [coef] var ... [ [ quad terms ] ]`` into linear and quadratic lists."""
    linear, quad = [], []
    pos = 0
    in_quad = False
    sign = 1.0
    while pos < len(tokens):
        tok = tokens[pos]
        if tok in ("+", "-"):
            sign = -sign if tok == "-" else sign
            pos += 1
            continue
        if tok == "[":
            in_quad = True
            pos += 1
            continue
        if tok == "]":
            in_quad = False
            pos += 1
            if pos < len(tokens) and tokens[pos].startswith("/"):
                raise ParseError("halved quadratic objectives are not supported", lineno, path)
            continue
        coef = 1.0
        if _is_number(tok):
            coef = float(tok)
            pos += 1
            if pos >= len(tokens) or tokens[pos] in ("+", "-", "]"):
                linear.append((sign * coef, None))
                sign = 1.0
                continue
        if pos >= len(tokens):
            raise ParseError("dangling coefficient", lineno, path)
        var = tokens[pos]
        pos += 1
        if in_quad:
            if pos < len(tokens) and tokens[pos] == "*":
                other = tokens[pos + 1] if pos + 1 < len(tokens) else None
                if other is None:
                    raise ParseError("incomplete product term", lineno, path)
                quad.append((sign * coef, var, other))
                pos += 2
            else:
                raise ParseError(f"expected '*' after {var!r}", lineno, path)
        else:
            linear.append((sign * coef, var))
        sign = 1.0
    return linear, quad


def parse_lp(text: str, path: str | None = None) -> LpModel:
    """Read an LP file as written by :func:`write_lp` (and reasonable variations of it)."""
    model = LpModel()
    section = None
    # Statements may span lines; gather them per section first.
    chunks: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "end":
                break
            chunks.append((section, "", lineno))
            continue
        if section is None:
            raise ParseError("content before the objective section", lineno, path)
        sec, body, start = chunks[-1]
        starts_new = section in ("st", "bounds") and re.match(r"^[A-Za-z_][\w.]*\s*:", line)
        if section in ("st",) and starts_new and body:
            chunks.append((section, line, lineno))
        elif section == "bounds":
            chunks.append((section, line, lineno))
        else:
            chunks[-1] = (sec, f"{body} {line}".strip(), start if body else lineno)
    else:
        if section != "end":
            raise ParseError("missing End", None, path)

    for sec, body, lineno in chunks:
        if not body:
            continue
        if sec == "obj":
            name, sep, rest = body.partition(":")
            expr = rest if sep else body
            lin, quad = _parse_expr(_TOKEN.findall(expr), lineno, path)
            model.linear = [(c, v) for c, v in lin if v is not None]
            model.quadratic = quad
        elif sec == "st":
            name, sep, rest = body.partition(":")
            if not sep:
                raise ParseError("constraints must be named", lineno, path)
            toks = _TOKEN.findall(rest)
            idx = next((p for p, t in enumerate(toks) if t in ("<=", ">=", "=", "=<", "=>", "<", ">")), None)
            if idx is None or idx + 1 >= len(toks):
                raise ParseError(f"constraint {name.strip()!r} lacks a sense", lineno, path)
            sense = {"=<": "<=", "=>": ">=", "<": "<=", ">": ">="}.get(toks[idx], toks[idx])
            rhs_toks = toks[idx + 1:]
            rhs_sign = -1.0 if rhs_toks[0] == "-" else 1.0
            rhs_toks = rhs_toks[1:] if rhs_toks[0] in ("+", "-") else rhs_toks
            if len(rhs_toks) != 1 or not _is_number(rhs_toks[0]):
                raise ParseError("right-hand side must be a constant", lineno, path)
            lin, quad = _parse_expr(toks[:idx], lineno, path)
            if quad or any(v is None for _, v in lin):
                raise ParseError("constraints must be linear in variables", lineno, path)
            model.constraints.append(Constraint(name.strip(), lin, sense, rhs_sign * float(rhs_toks[0])))
        elif sec == "bounds":
            toks = body.split()
            if len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                model.bounds[toks[2]] = (float(toks[0]), float(toks[4]))
            elif len(toks) == 3 and toks[1] == ">=":
                model.bounds[toks[0]] = (float(toks[2]), math.inf)
            elif len(toks) == 3 and toks[1] == "<=":
                model.bounds[toks[0]] = (0.0, float(toks[2]))
            else:
                raise ParseError(f"unsupported bound {body!r}", lineno, path)
        elif sec == "bin":
            model.binaries.extend(body.split())
        elif sec == "gen":
            model.generals.extend(body.split())
    declared = set(model.binaries) | set(model.generals)
    seen = []
    for v in [v for _, v in model.linear] + [v for c in model.constraints for _, v in c.terms] + \
            [v for _, a, b in model.quadratic for v in (a, b)] + list(model.bounds):
        if v not in declared and v not in seen:
            seen.append(v)
    model.continuous = seen
    return model


# ---------------------------------------------------------------------------
# Exporters


def _xname(i, j):
    return f"x_{i}_{j}"


def _yname(i, j, k):
    return f"y_{i}_{j}_{k}"


def _uname(i):
    return f"u_{i}"


def _gname(i, j):
    return f"g_{i}_{j}"


def _check_n(inst: Instance):
    if inst.n < 3:
        raise InvalidArgumentError("model export needs n >= 3")


def _arcs(n):
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _xu_part(model: LpModel, n: int, subtour: str, manifest: list[VarInfo]) -> None:
    arcs = _arcs(n)
    for i in range(n):
        model.constraints.append(Constraint(f"out_{i}", [(1.0, _xname(i, j)) for j in range(n) if j != i], "=", 1))
    for i in range(n):
        model.constraints.append(Constraint(f"in_{i}", [(1.0, _xname(j, i)) for j in range(n) if j != i], "=", 1))
    if subtour == "dl":
        for i in range(1, n):
            for j in range(1, n):
                if i != j:
                    model.constraints.append(Constraint(f"dl_{i}_{j}", [
                        (1.0, _uname(i)), (-1.0, _uname(j)),
                        (float(n - 1), _xname(i, j)), (float(n - 3), _xname(j, i))], "<=", n - 2))
    elif subtour == "mtz":
        for i in range(1, n):
            for j in range(1, n):
                if i != j:
                    model.constraints.append(Constraint(f"mtz_{i}_{j}", [
                        (1.0, _uname(i)), (-1.0, _uname(j)), (float(n), _xname(i, j))], "<=", n - 1))
    else:
        for i in range(n):
            terms = [(1.0, _gname(j, i)) for j in range(n) if j != i] + \
                    [(-1.0, _gname(i, j)) for j in range(n) if j != i]
            # The depot emits n - 1 units; each customer absorbs one.
            model.constraints.append(Constraint(f"flow_{i}", terms, "=", -(n - 1) if i == 0 else 1))
        for i, j in arcs:
            model.constraints.append(Constraint(f"cap_{i}_{j}", [
                (1.0, _gname(i, j)), (-float(n - 1), _xname(i, j))], "<=", 0))
    for i, j in arcs:
        model.binaries.append(_xname(i, j))
        manifest.append(VarInfo(_xname(i, j), "binary", (i, j)))
    if subtour in ("dl", "mtz"):
        for i in range(1, n):
            model.bounds[_uname(i)] = (1.0, float(n - 1))
            model.generals.append(_uname(i))
            manifest.append(VarInfo(_uname(i), "integer", (i,)))
    else:
        for i, j in arcs:
            model.bounds[_gname(i, j)] = (0.0, math.inf)
            model.continuous.append(_gname(i, j))
            manifest.append(VarInfo(_gname(i, j), "continuous", (i, j)))


def build_milp(inst: Instance, subtour: str = "dl") -> tuple[LpModel, list[VarInfo]]:
    if subtour not in SUBTOUR_FORMS:
        raise InvalidArgumentError(f"unknown subtour form {subtour!r}; expected one of {SUBTOUR_FORMS}")
    _check_n(inst)
    n = inst.n
    c = inst.costs
    model = LpModel()
    manifest: list[VarInfo] = []
    triples = list(inst.triples())
    model.linear = [(float(c[i, j, k]), _yname(i, j, k)) for i, j, k in triples]
    _xu_part(model, n, subtour, manifest)
    for i, j in _arcs(n):
        terms = [(1.0, _xname(i, j))] + [(-1.0, _yname(i, j, k)) for k in range(n) if k not in (i, j)]
        model.constraints.append(Constraint(f"link_out_{i}_{j}", terms, "=", 0))
    for i, j in _arcs(n):
        terms = [(1.0, _xname(i, j))] + [(-1.0, _yname(k, i, j)) for k in range(n) if k not in (i, j)]
        model.constraints.append(Constraint(f"link_in_{i}_{j}", terms, "=", 0))
    # Keep x before y in the binaries list to mirror the manifest.
    for i, j, k in triples:
        model.binaries.append(_yname(i, j, k))
        manifest.append(VarInfo(_yname(i, j, k), "binary", (i, j, k)))
    manifest = _manifest_order(manifest)
    return model, manifest


def _manifest_order(manifest: list[VarInfo]) -> list[VarInfo]:
    rank = {"x": 0, "y": 1, "u": 2, "g": 3}
    return sorted(manifest, key=lambda v: (rank[v.name[0]], v.indices))


def export_milp(inst: Instance, subtour: str = "dl") -> ModelText:
    model, manifest = build_milp(inst, subtour)
    body = write_lp(model, f"qtsp milp n={inst.n} kind={inst.kind} subtour={subtour}")
    return ModelText("lp-milp", body, manifest)


def build_miqp(inst: Instance) -> tuple[LpModel, list[VarInfo]]:
    _check_n(inst)
    c = inst.costs
    model = LpModel()
    manifest: list[VarInfo] = []
    model.quadratic = [(float(c[i, j, k]), _xname(i, j), _xname(j, k)) for i, j, k in inst.triples()]
    _xu_part(model, inst.n, "dl", manifest)
    return model, _manifest_order(manifest)


def export_miqp(inst: Instance) -> ModelText:
    model, manifest = build_miqp(inst)
    body = write_lp(model, f"qtsp miqp n={inst.n} kind={inst.kind}")
    return ModelText("lp-miqp", body, manifest)


def lp_values(a, subtour: str = "dl") -> dict[str, float]:
    """Variable values for an LP model built from a MILP assignment.

    For the flow form, arc flows are derived by walking the tour from 0:
    the arc leaving the p-th visited node carries ``n - 1 - p`` units.
    """
    n = a.n
    vals: dict[str, float] = {}
    for i, j in _arcs(n):
        vals[_xname(i, j)] = float(a.x[i, j])
        for k in range(n):
            if k not in (i, j):
                vals[_yname(i, j, k)] = float(a.y[i, j, k])
    for i in range(1, n):
        vals[_uname(i)] = float(a.u[i])
    if subtour == "flow":
        for i, j in _arcs(n):
            vals[_gname(i, j)] = 0.0
        succ = {i: j for i, j in _arcs(n) if a.x[i, j]}
        node, load = 0, n - 1
        for _ in range(n):
            nxt = succ.get(node)
            if nxt is None:
                break
            vals[_gname(node, nxt)] = float(load)
            load -= 1
            node = nxt
            if node == 0:
                break
    return vals
