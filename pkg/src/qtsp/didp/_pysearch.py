"""Pure-Python search kernels.

This is the reference backend and the fallback when the compiled extension
is unavailable. ``_speedups.pyx`` implements the same two functions with the
same arithmetic and tie-breaking, so both backends return identical tours,
costs and event sequences.

Kernel contract (shared by both backends)
-----------------------------------------
``stop_check(expansions) -> bool`` is polled before every expansion whose
count is a multiple of ``CHECK_EVERY``. ``on_improve(tour, cost, expansions)``
fires when a tour beats the incumbent by more than ``TOL``.
Return codes: ``DONE`` search finished, ``STOPPED`` time or expansion budget
hit, ``MEMORY`` node cap exceeded.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

TOL = 1e-9
CHECK_EVERY = 256
DONE, STOPPED, MEMORY = 0, 1, 2

NAME = "python"


def _line(table, mask: int) -> float:
    vals = []
    while mask:
        low = mask & -mask
        vals.append(table[low.bit_length() - 1])
        mask ^= low
    return math.fsum(vals)


def _h(tabs, U: int, i: int, j: int, f: int) -> float:
    in_min, mid_min, out_min = tabs
    a = _line(in_min, U | 1 << f | 1)
    b = _line(mid_min, U | 1 << j | 1)
    c = _line(out_min, U | 1 << i | 1 << j)
    return max(a, b, c)


def _tolists(costs, in_min, mid_min, out_min):
    n = costs.shape[0]
    c = np.asarray(costs, dtype=np.float64).tolist()
    tabs = tuple(np.asarray(t, dtype=np.float64).tolist() for t in (in_min, mid_min, out_min))
    return n, c, tabs


def cabs_pass(costs, in_min, mid_min, out_min, width, incumbent, node_cap, expansions, expansion_limit,
              stop_check, on_improve):
    """One beam-search pass of width ``width`` from the root.

    Returns ``(code, expansions, incumbent, dropped, min_dropped_priority)``.
    """
    n, c, tabs = _tolists(costs, in_min, mid_min, out_min)
    full = ((1 << n) - 1) & ~1
    # Per kept node: (U, i, j, f, g, history index); history entries are (parent, j).
    hist_parent = [-1]
    hist_j = [0]
    layer = [(full, 0, 0, 0, 0.0, 0)]
    dropped = False
    min_drop = math.inf
    stored = 1

    def tour_from(hidx: int, last: int) -> tuple[int, ...]:
        seq = [last]
        while hidx > 0:
            seq.append(hist_j[hidx])
            hidx = hist_parent[hidx]
        seq.append(0)
        return tuple(reversed(seq))

    while layer:
        cand: list[list] = []
        index: dict[tuple[int, int, int, int], int] = {}
        for U, i, j, f, g, hidx in layer:
            if expansion_limit >= 0 and expansions >= expansion_limit:
                return STOPPED, expansions, incumbent, dropped, min_drop
            if expansions % CHECK_EVERY == 0 and stop_check(expansions):
                return STOPPED, expansions, incumbent, dropped, min_drop
            expansions += 1
            m = U
            while m:
                low = m & -m
                k = low.bit_length() - 1
                m ^= low
                U2 = U ^ low
                if j == 0:
                    g2 = g
                    key = (U2, 0, k, k)
                else:
                    g2 = g + c[i][j][k]
                    if not U2:
                        total = g2 + c[k][0][f] + c[j][k][0]
                        if total < incumbent - TOL:
                            incumbent = total
                            on_improve(tour_from(hidx, k), total, expansions)
                        continue
                    key = (U2, j, k, f)
                h = _h(tabs, *key)
                if g2 + h >= incumbent - TOL:
                    continue
                pos = index.get(key)
                if pos is None:
                    index[key] = len(cand)
                    cand.append([key, g2, h, hidx])
                    stored += 1
                    if node_cap >= 0 and stored > node_cap:
                        return MEMORY, expansions, incumbent, dropped, min_drop
                elif g2 < cand[pos][1]:
                    cand[pos][1] = g2
                    cand[pos][2] = h
                    cand[pos][3] = hidx
        if not cand:
            break
        cand.sort(key=lambda e: (e[1] + e[2], -e[1], e[0]))
        if len(cand) > width:
            dropped = True
            first = cand[width]
            min_drop = min(min_drop, first[1] + first[2])
            stored -= len(cand) - width
            del cand[width:]
        layer = []
        for (U2, i2, j2, f2), g2, _h2, parent in cand:
            hist_parent.append(parent)
            hist_j.append(j2)
            layer.append((U2, i2, j2, f2, g2, len(hist_j) - 1))
    return DONE, expansions, incumbent, dropped, min_drop


def exact_search(costs, in_min, mid_min, out_min, prune, incumbent, node_cap, expansions, expansion_limit,
                 stop_check, on_improve, on_bound):
    """Best-first search with duplicate detection and re-opening.

    ``on_bound(dual, expansions)`` is called at poll points when the proven
    lower bound ``min(top priority, incumbent)`` has risen.
    Returns ``(code, expansions, incumbent, dual)``.
    """
    n, c, tabs = _tolists(costs, in_min, mid_min, out_min)
    full = ((1 << n) - 1) & ~1
    node_key: list[tuple[int, int, int, int]] = [(full, 0, 0, 0)]
    node_g = [0.0]
    node_parent = [-1]
    best = {node_key[0]: 0}
    h0 = _h(tabs, full, 0, 0, 0)
    heap = [(h0, -0.0, full, 0, 0, 0, 0)]
    dual = h0

    def tour_from(nid: int, last: int) -> tuple[int, ...]:
        seq = [last]
        while nid > 0:
            seq.append(node_key[nid][2])
            nid = node_parent[nid]
        seq.append(0)
        return tuple(reversed(seq))

    while heap:
        top = heap[0][0]
        if prune and top >= incumbent - TOL:
            return DONE, expansions, incumbent, incumbent
        if expansion_limit >= 0 and expansions >= expansion_limit:
            return STOPPED, expansions, incumbent, dual
        if expansions % CHECK_EVERY == 0:
            lb = min(top, incumbent)
            if lb > dual:
                dual = lb
                on_bound(dual, expansions)
            if stop_check(expansions):
                return STOPPED, expansions, incumbent, dual
        _, _, U, i, j, f, nid = heapq.heappop(heap)
        if best.get((U, i, j, f)) != nid:
            continue
        expansions += 1
        g = node_g[nid]
        m = U
        while m:
            low = m & -m
            k = low.bit_length() - 1
            m ^= low
            U2 = U ^ low
            if j == 0:
                g2 = g
                key = (U2, 0, k, k)
            else:
                g2 = g + c[i][j][k]
                if not U2:
                    total = g2 + c[k][0][f] + c[j][k][0]
                    if total < incumbent - TOL:
                        incumbent = total
                        on_improve(tour_from(nid, k), total, expansions)
                    continue
                key = (U2, j, k, f)
            h = _h(tabs, *key)
            if prune and g2 + h >= incumbent - TOL:
                continue
            old = best.get(key)
            if old is not None and node_g[old] <= g2:
                continue
            cid = len(node_g)
            if node_cap >= 0 and cid + 1 > node_cap:
                return MEMORY, expansions, incumbent, dual
            node_key.append(key)
            node_g.append(g2)
            node_parent.append(nid)
            best[key] = cid
            heapq.heappush(heap, (g2 + h, -g2, key[0], key[1], key[2], key[3], cid))
    return DONE, expansions, incumbent, incumbent
