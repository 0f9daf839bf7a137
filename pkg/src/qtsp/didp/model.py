"""The QTSP dynamic-programming model: states, transitions and the dual bound.

A state ``(U, i, j, f)`` holds the unvisited customers ``U`` (as an int
bitmask, so any ``n`` works), the previous customer ``i``, the current
customer ``j`` and ``f``, the first customer visited after 0. The root is
``(N \\ {0}, 0, 0, 0)``.

Transitions from a state:

* ``j == 0``: pick the first customer ``k``; go to ``(U - {k}, 0, k, k)`` at cost 0.
* ``j != 0`` and ``U`` nonempty: visit ``k``; go to ``(U - {k}, j, k, f)`` at
  cost ``c[i, j, k]``.
* ``j != 0`` and ``U`` empty: terminal, closing the tour costs
  ``c[j, 0, f] + c[i, j, 0]``.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple

import numpy as np

from ..instance import Instance


class State(NamedTuple):
    U: int
    i: int
    j: int
    f: int

    @classmethod
    def root(cls, n: int) -> State:
        return cls(((1 << n) - 1) & ~1, 0, 0, 0)

    def unvisited(self) -> list[int]:
        return bits(self.U)

    def is_valid(self, n: int) -> bool:
        if self.U >> n or self.U & 1:
            return False
        for v in (self.i, self.j, self.f):
            if not 0 <= v < n or self.U >> v & 1:
                return False
        if self.j == 0:
            return self.i == 0 and self.f == 0
        return self.f != 0


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(items) -> int:
    m = 0
    for v in items:
        m |= 1 << v
    return m


@dataclass(frozen=True)
class BoundTables:
    """Per-customer minimum triple costs.

    ``in_min[k]``: cheapest triple ending at ``k``; ``mid_min[k]``: cheapest
    triple with ``k`` in the middle; ``out_min[k]``: cheapest triple starting
    at ``k``.
    """

    in_min: np.ndarray
    mid_min: np.ndarray
    out_min: np.ndarray


def precompute_bound_tables(inst: Instance) -> BoundTables:
    n = inst.n
    c = inst.costs.copy()
    ii = np.arange(n)
    same = (
        (ii[:, None, None] == ii[None, :, None])
        | (ii[None, :, None] == ii[None, None, :])
        | (ii[:, None, None] == ii[None, None, :])
    )
    c[same] = np.inf
    tables = BoundTables(
        in_min=c.min(axis=(0, 1)),
        mid_min=c.min(axis=(0, 2)),
        out_min=c.min(axis=(1, 2)),
    )
    for arr in (tables.in_min, tables.mid_min, tables.out_min):
        arr.flags.writeable = False
    return tables


def _line(table: np.ndarray, mask: int) -> float:
    # Correctly rounded, so the bound never rounds above an fsum tour cost.
    return math.fsum(float(table[k]) for k in bits(mask))


def dual_bound(state: State, tables: BoundTables) -> float:
    """Lower bound on the optimal completion cost of ``state``.

    Maximum of three sums, each over a set of customers (repeated indices
    count once): ``in_min`` over ``U + {f, 0}``, ``mid_min`` over
    ``U + {j, 0}`` and ``out_min`` over ``U + {i, j}``.
    """
    U, i, j, f = state
    a = _line(tables.in_min, U | 1 << f | 1)
    b = _line(tables.mid_min, U | 1 << j | 1)
    c = _line(tables.out_min, U | 1 << i | 1 << j)
    return max(a, b, c)


def expand(state: State, inst: Instance) -> list[tuple[State, float]]:
    """Successor states with their transition costs, in increasing ``k``."""
    U, i, j, f = state
    if j == 0:
        return [(State(U & ~(1 << k), 0, k, k), 0.0) for k in bits(U)]
    c = inst.costs
    return [(State(U & ~(1 << k), j, k, f), float(c[i, j, k])) for k in bits(U)]


def terminal_cost(state: State, inst: Instance) -> float | None:
    """Cost of closing the tour from a state with nothing left to visit, else ``None``."""
    U, i, j, f = state
    if U or j == 0:
        return None
    c = inst.costs
    return float(c[j, 0, f]) + float(c[i, j, 0])


def reachable_states(n: int):
    """Yield every state reachable from the root (for exhaustive checks; small ``n`` only)."""
    full = ((1 << n) - 1) & ~1
    yield State(full, 0, 0, 0)
    seen = set()
    for d in range(1, n):
        for prefix in permutations(range(1, n), d):
            U = full & ~mask_of(prefix)
            i = prefix[-2] if d >= 2 else 0
            s = State(U, i, prefix[-1], prefix[0])
            if s not in seen:
                seen.add(s)
                yield s
