"""Brute-force ground truth: full enumeration, no pruning."""

from __future__ import annotations

import math
from itertools import permutations

from .didp.model import State, bits
from .errors import SizeGuardError
from .instance import Instance, Tour, tour_cost

MAX_TOUR_N = 12
MAX_COMPLETION_U = 9


def brute_force_optimal(inst: Instance) -> tuple[Tour, float]:
    """Cheapest tour over all ``(n-1)!`` orders starting at 0.

    Ties go to the lexicographically smallest order.
    """
    if inst.n > MAX_TOUR_N:
        raise SizeGuardError(f"brute force limited to n <= {MAX_TOUR_N}, got n={inst.n}")
    best_order = None
    best = math.inf
    for rest in permutations(range(1, inst.n)):
        order = (0,) + rest
        cost = tour_cost(inst, order)
        if cost < best:
            best, best_order = cost, order
    return Tour(best_order), best


def _completion_terms(c, i: int, j: int, f: int, seq) -> list[float]:
    terms = []
    for k in seq:
        terms.append(float(c[i, j, k]))
        i, j = j, k
    terms.append(float(c[j, 0, f]))
    terms.append(float(c[i, j, 0]))
    return terms


def brute_force_completion(inst: Instance, state: State) -> float:
    """Exact optimal cost-to-go of ``state`` by enumerating every order of ``U``."""
    U, i, j, f = state
    left = bits(U)
    if len(left) > MAX_COMPLETION_U:
        raise SizeGuardError(f"completion enumeration limited to |U| <= {MAX_COMPLETION_U}, got {len(left)}")
    c = inst.costs
    best = math.inf
    for seq in permutations(left):
        if j == 0:
            # The first pick becomes f; the path so far is just customer 0.
            first = seq[0]
            terms = _completion_terms(c, 0, first, first, seq[1:])
        else:
            terms = _completion_terms(c, i, j, f, seq)
        best = min(best, math.fsum(terms))
    return best
