"""QTSP instances, benchmark cost functions and tour evaluation.

Customers are ``0..n-1``. A cost tensor ``c`` is stored densely as an
``(n, n, n)`` float64 array; ``c[i, j, k]`` is the cost of visiting ``i``,
``j`` and ``k`` consecutively. Entries with repeated indices are never read and
are kept at zero.

Generated costs are rounded to 12 decimal places, half-to-even, and the
rounding is applied to the *exact* mathematical value: each entry is the
float nearest to the correctly rounded 12-digit decimal. Extended precision
decides almost every entry, the rest (values within a few ulps of a rounding
midpoint) are recomputed with mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGeometryError, InvalidArgumentError, InvalidTourError
from .rng import Xoshiro256

GRID_MAX = 500
DEFAULT_RHO = 40.0
DECIMALS = 12
KINDS = ("angle", "angledistance", "explicit")
KIND_ALIASES = {"angle-distance": "angledistance", "angle_distance": "angledistance"}

Point = tuple[int, int]


def normalize_kind(kind: str) -> str:
    k = KIND_ALIASES.get(kind, kind)
    if k not in KINDS:
        raise InvalidArgumentError(f"unknown cost kind {kind!r}; expected one of {', '.join(KINDS)}")
    return k


def round12(x: float) -> float:
    """Round a float half-to-even at the 12th decimal via decimal formatting."""
    return float(format(x, ".12f"))


# ---------------------------------------------------------------------------
# Geometry


def turning_angle(a: Sequence[float], b: Sequence[float], c: Sequence[float]) -> float:
    """Angle in radians between the vectors ``b - a`` and ``c - b``."""
    ux, uy = b[0] - a[0], b[1] - a[1]
    vx, vy = c[0] - b[0], c[1] - b[1]
    nu = math.sqrt(ux * ux + uy * uy)
    nv = math.sqrt(vx * vx + vy * vy)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError(f"zero-length segment in turning angle at {tuple(b)}")
    cos = (ux * vx + uy * vy) / (nu * nv)
    return math.acos(min(1.0, max(-1.0, cos)))


def generate_points(n: int, seed: int) -> list[Point]:
    """``n`` distinct points uniform on the ``{0..500}^2`` grid.

    Coordinates come from :class:`~qtsp.rng.Xoshiro256` seeded with ``seed``:
    x then y for each point, each by rejection sampling. A point equal to one
    already drawn is discarded and redrawn.
    """
    if n < 3:
        raise InvalidArgumentError(f"need at least 3 customers, got n={n}")
    if n > (GRID_MAX + 1) ** 2:
        raise InvalidArgumentError(f"n={n} exceeds the number of grid points")
    rng = Xoshiro256(seed)
    seen: set[Point] = set()
    points: list[Point] = []
    while len(points) < n:
        p = (rng.randint(GRID_MAX), rng.randint(GRID_MAX))
        if p in seen:
            continue
        seen.add(p)
        points.append(p)
    return points


def _check_points(points: Sequence[Sequence[int]]) -> np.ndarray:
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidArgumentError("points must be a sequence of (x, y) pairs")
    if pts.shape[0] < 3:
        raise InvalidArgumentError(f"need at least 3 points, got {pts.shape[0]}")
    if len({(int(x), int(y)) for x, y in pts}) != len(pts):
        raise DegenerateGeometryError("points must be pairwise distinct")
    return pts


_LD = np.longdouble
# Relative error allowance of the extended-precision evaluation, in ulps.
_ULPS = 8
_SCALE = 10**DECIMALS


def _to_float(m: np.ndarray) -> np.ndarray:
    """Nearest float64 to ``m * 10**-12`` for an int64 array ``m >= 0``."""
    q, r = np.divmod(m, _SCALE)
    x = q.astype(_LD) + r.astype(_LD) / _LD(_SCALE)
    small = m < (1 << 53)
    # Below 2**53 both operands are exact doubles and IEEE division rounds correctly.
    out = np.where(small, m.astype(np.float64) / 1e12, x.astype(np.float64))
    # Extended precision can only misround when it lands next to a float64 midpoint.
    half = np.spacing(np.abs(out)).astype(_LD) / 2
    err = np.abs(x - out.astype(_LD))
    risky = np.abs(err - half) <= 4 * np.finfo(_LD).eps * np.abs(x)
    for idx in zip(*np.nonzero(risky & ~small)):
        out[idx] = float(f"{int(m[idx])}e-12")
    return out


def _mp_round_scaled(value) -> int:
    from mpmath import mp

    q = value * _SCALE
    fl = int(mp.floor(q))
    frac = q - fl
    half = mp.mpf(1) / 2
    if abs(frac - half) < mp.mpf(10) ** -30:
        return fl if fl % 2 == 0 else fl + 1
    return fl + 1 if frac > half else fl


def _build_costs(pts: np.ndarray, rho: float | None) -> np.ndarray:
    from mpmath import mp

    n = pts.shape[0]
    costs = np.zeros((n, n, n), dtype=np.float64)
    idx = np.arange(n)
    upper = idx[:, None] < idx[None, :]
    eps = np.finfo(_LD).eps
    for j in range(n):
        into = pts[j] - pts  # row i: vector i -> j
        out = pts - pts[j]  # row k: vector j -> k
        dot = into[:, 0:1] * out[None, :, 0] + into[:, 1:2] * out[None, :, 1]
        cross = into[:, 0:1] * out[None, :, 1] - into[:, 1:2] * out[None, :, 0]
        theta = np.arctan2(np.abs(cross).astype(_LD), dot.astype(_LD))
        sq = (into * into).sum(axis=1)
        if rho is None:
            vals = theta * _LD(1000)
        else:
            d = np.sqrt(sq.astype(_LD))
            vals = _LD(100) * (_LD(rho) * theta + (d[:, None] + d[None, :]) / _LD(2))
        valid = (idx[:, None] != j) & (idx[None, :] != j) & upper
        scaled = np.where(valid, vals, _LD(0)) * _LD(_SCALE)
        m = np.rint(scaled).astype(np.int64)
        dist = np.abs(scaled - np.floor(scaled) - _LD(0.5))
        for i, k in zip(*np.nonzero(valid & (dist <= _ULPS * eps * np.abs(scaled)))):
            i, k = int(i), int(k)
            with mp.workdps(40):
                th = mp.atan2(abs(int(cross[i, k])), int(dot[i, k]))
                if rho is None:
                    v = 1000 * th
                else:
                    v = 100 * (mp.mpf(rho) * th + (mp.sqrt(int(sq[i])) + mp.sqrt(int(sq[k]))) / 2)
                m[i, k] = _mp_round_scaled(v)
        # c[i, j, k] == c[k, j, i]: both triples see the same |cross| and dot.
        m = np.where(upper, m, m.T)
        costs[:, j, :] = _to_float(m)
    return costs


def build_angle_costs(points: Sequence[Sequence[int]]) -> np.ndarray:
    """AngleTSP tensor: 1000 x turning angle, rounded to 12 decimals."""
    return _build_costs(_check_points(points), None)


def build_angle_distance_costs(points: Sequence[Sequence[int]], rho: float = DEFAULT_RHO) -> np.ndarray:
    """AngleDistanceTSP tensor: ``100 * (rho * angle + (d_ij + d_jk) / 2)``, rounded to 12 decimals.

    ``angle`` is the raw turning angle in radians.
    """
    if rho < 0 or not math.isfinite(rho):
        raise InvalidArgumentError(f"rho must be a finite nonnegative number, got {rho}")
    return _build_costs(_check_points(points), float(rho))


# ---------------------------------------------------------------------------
# Instances and tours


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    kind: str
    costs: np.ndarray
    points: tuple[Point, ...] | None = None
    rho: float | None = None
    seed: int | None = None
    on_grid: bool = True

    def __post_init__(self):
        if self.n < 3:
            raise InvalidArgumentError(f"need at least 3 customers, got n={self.n}")
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown cost kind {self.kind!r}")
        if (self.rho is not None) != (self.kind == "angledistance"):
            raise InvalidArgumentError("rho must be given exactly for angledistance instances")
        if (self.points is None) != (self.kind == "explicit"):
            raise InvalidArgumentError("points must be given exactly for point-based kinds")
        if self.points is not None and len(self.points) != self.n:
            raise InvalidArgumentError(f"expected {self.n} points, got {len(self.points)}")
        c = self.costs
        if c.shape != (self.n,) * 3 or c.dtype != np.float64:
            raise InvalidArgumentError(f"costs must be a float64 array of shape {(self.n,) * 3}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise InvalidArgumentError("cost entries must be finite and nonnegative")
        if c.flags.writeable:
            c = np.ascontiguousarray(c).copy()
            c.flags.writeable = False
            object.__setattr__(self, "costs", c)

    @classmethod
    def from_points(cls, points, kind: str = "angle", rho: float | None = None, seed: int | None = None) -> Instance:
        kind = normalize_kind(kind)
        pts = tuple((int(x), int(y)) for x, y in points)
        if kind == "angle":
            costs = build_angle_costs(pts)
            rho = None
        elif kind == "angledistance":
            rho = DEFAULT_RHO if rho is None else float(rho)
            costs = build_angle_distance_costs(pts, rho)
        else:
            raise InvalidArgumentError("explicit instances are built with Instance.from_costs")
        on_grid = all(0 <= x <= GRID_MAX and 0 <= y <= GRID_MAX for x, y in pts)
        return cls(n=len(pts), kind=kind, costs=costs, points=pts, rho=rho, seed=seed, on_grid=on_grid)

    @classmethod
    def from_costs(cls, costs, seed: int | None = None) -> Instance:
        c = np.array(costs, dtype=np.float64)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise InvalidArgumentError(f"cost tensor must be n x n x n, got shape {c.shape}")
        n = c.shape[0]
        ii = np.arange(n)
        diag = (ii[:, None, None] == ii[None, :, None]) | (ii[None, :, None] == ii[None, None, :]) | (
            ii[:, None, None] == ii[None, None, :]
        )
        c[diag] = 0.0
        return cls(n=n, kind="explicit", costs=c, seed=seed)

    @classmethod
    def constant(cls, n: int, value: float) -> Instance:
        """Explicit instance with every distinct-triple cost equal to ``value``."""
        return cls.from_costs(np.full((n, n, n), float(value)))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.n == other.n
            and self.kind == other.kind
            and self.rho == other.rho
            and self.points == other.points
            and self.seed == other.seed
            and np.array_equal(self.costs, other.costs)
        )

    __hash__ = None  # type: ignore[assignment]

    def triples(self) -> Iterable[tuple[int, int, int]]:
        """All ordered distinct triples in ascending order."""
        n = self.n
        for i in range(n):
            for j in range(n):
                if j == i:
                    continue
                for k in range(n):
                    if k != i and k != j:
                        yield i, j, k


def generate_instance(n: int, seed: int, kind: str = "angle", rho: float | None = None) -> Instance:
    return Instance.from_points(generate_points(n, seed), kind=kind, rho=rho, seed=seed)


@dataclass(frozen=True)
class Tour:
    """A tour as a visiting order; canonical tours start at customer 0."""

    order: tuple[int, ...]

    def __init__(self, order: Iterable[int]):
        object.__setattr__(self, "order", tuple(int(v) for v in order))

    @classmethod
    def from_cycle(cls, cycle: Sequence[int]) -> Tour:
        """Rotate a cyclic order so that it starts at 0."""
        seq = list(cycle)
        if 0 not in seq:
            raise InvalidTourError("cycle does not contain customer 0")
        p = seq.index(0)
        return cls(seq[p:] + seq[:p])

    def reversed(self) -> Tour:
        """Same cycle traversed backwards, still starting at 0."""
        return Tour((self.order[0],) + tuple(reversed(self.order[1:])))

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __getitem__(self, i):
        return self.order[i]


def _as_order(t) -> tuple[int, ...]:
    return t.order if isinstance(t, Tour) else tuple(int(v) for v in t)


@dataclass(frozen=True)
class Violation:
    kind: str  # wrong-length | wrong-start | duplicate | missing | out-of-range
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


def validate_tour(inst: Instance | int, t) -> list[Violation]:
    """List every violated tour invariant; an empty list means the tour is valid."""
    n = inst if isinstance(inst, int) else inst.n
    order = _as_order(t)
    out: list[Violation] = []
    if len(order) != n:
        out.append(Violation("wrong-length", f"expected {n} customers, got {len(order)}"))
    if not order or order[0] != 0:
        out.append(Violation("wrong-start", f"tour must start at 0, starts at {order[0] if order else None}"))
    bad = sorted({v for v in order if not 0 <= v < n})
    if bad:
        out.append(Violation("out-of-range", f"customers outside 0..{n - 1}: {bad}"))
    counts: dict[int, int] = {}
    for v in order:
        counts[v] = counts.get(v, 0) + 1
    dups = sorted(v for v, c in counts.items() if c > 1)
    if dups:
        out.append(Violation("duplicate", f"visited more than once: {dups}"))
    missing = [v for v in range(n) if v not in counts]
    if missing:
        out.append(Violation("missing", f"never visited: {missing}"))
    return out


def _cycle_terms(costs: np.ndarray, order: Sequence[int]) -> list[float]:
    m = len(order)
    return [float(costs[order[p - 1], order[p], order[(p + 1) % m]]) for p in range(m)]


def cycle_cost(inst: Instance, cycle: Sequence[int]) -> float:
    """Cost of a cyclic order given in any rotation."""
    order = _as_order(cycle)
    if sorted(order) != list(range(inst.n)):
        raise InvalidTourError(f"not a permutation of 0..{inst.n - 1}: {list(order)}")
    return math.fsum(_cycle_terms(inst.costs, order))


def tour_cost(inst: Instance, t) -> float:
    """Sum of the ``n`` consecutive-triple costs of a closed tour.

    The terms are added with :func:`math.fsum`, so the result is the
    correctly rounded exact sum and does not depend on summation order.
    """
    order = _as_order(t)
    problems = validate_tour(inst, order)
    if problems:
        raise InvalidTourError("; ".join(str(p) for p in problems))
    return math.fsum(_cycle_terms(inst.costs, order))
