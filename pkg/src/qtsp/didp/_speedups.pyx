# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled search kernels; same contract and arithmetic as ``_pysearch``.

States are stored struct-of-arrays with the unvisited set as ``W`` 64-bit
words (``n <= 256``). Open-addressing hash tables index states by key.
"""

from libc.stdint cimport int16_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort, realloc
from libc.string cimport memcpy, memset

import numpy as np

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

cdef enum:
    MAXW = 4
    CHECK_EVERY = 256

cdef double TOL = 1e-9
cdef int DONE = 0
cdef int STOPPED = 1
cdef int MEMORY = 2

NAME = "cython"
MAX_N = 64 * MAXW


cdef struct Buf:
    int64_t n
    int64_t cap
    int W
    uint64_t* U
    double* g
    double* h
    int64_t* parent
    int16_t* i
    int16_t* j
    int16_t* f


cdef int buf_init(Buf* b, int W, int64_t cap) except -1:
    b.n = 0
    b.cap = cap if cap > 16 else 16
    b.W = W
    b.U = <uint64_t*> malloc(b.cap * W * sizeof(uint64_t))
    b.g = <double*> malloc(b.cap * sizeof(double))
    b.h = <double*> malloc(b.cap * sizeof(double))
    b.parent = <int64_t*> malloc(b.cap * sizeof(int64_t))
    b.i = <int16_t*> malloc(b.cap * sizeof(int16_t))
    b.j = <int16_t*> malloc(b.cap * sizeof(int16_t))
    b.f = <int16_t*> malloc(b.cap * sizeof(int16_t))
    if not (b.U and b.g and b.h and b.parent and b.i and b.j and b.f):
        raise MemoryError()
    return 0


cdef void buf_free(Buf* b) noexcept:
    free(b.U); free(b.g); free(b.h); free(b.parent); free(b.i); free(b.j); free(b.f)
    b.U = NULL; b.g = NULL; b.h = NULL; b.parent = NULL; b.i = NULL; b.j = NULL; b.f = NULL
    b.n = 0
    b.cap = 0


cdef void* _grow(void* p, size_t size) except NULL:
    cdef void* q = realloc(p, size)
    if q == NULL:
        raise MemoryError()
    return q


cdef int64_t buf_push(Buf* b) except -1:
    """Append an uninitialised slot and return its index."""
    cdef int64_t cap
    if b.n == b.cap:
        cap = b.cap * 2
        b.U = <uint64_t*> _grow(b.U, cap * b.W * sizeof(uint64_t))
        b.g = <double*> _grow(b.g, cap * sizeof(double))
        b.h = <double*> _grow(b.h, cap * sizeof(double))
        b.parent = <int64_t*> _grow(b.parent, cap * sizeof(int64_t))
        b.i = <int16_t*> _grow(b.i, cap * sizeof(int16_t))
        b.j = <int16_t*> _grow(b.j, cap * sizeof(int16_t))
        b.f = <int16_t*> _grow(b.f, cap * sizeof(int16_t))
        b.cap = cap
    b.n += 1
    return b.n - 1


cdef inline bint key_eq(Buf* b, int64_t x, int64_t y) noexcept nogil:
    cdef int w
    if b.i[x] != b.i[y] or b.j[x] != b.j[y] or b.f[x] != b.f[y]:
        return False
    for w in range(b.W):
        if b.U[x * b.W + w] != b.U[y * b.W + w]:
            return False
    return True


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t key_hash(Buf* b, int64_t x) noexcept nogil:
    cdef uint64_t hsh = <uint64_t>b.i[x] | (<uint64_t>b.j[x] << 16) | (<uint64_t>b.f[x] << 32)
    cdef int w
    hsh = mix64(hsh)
    for w in range(b.W):
        hsh = mix64(hsh ^ b.U[x * b.W + w])
    return hsh


cdef struct Table:
    int64_t* slots
    int64_t cap
    int64_t count


cdef int table_init(Table* t, int64_t cap) except -1:
    cdef int64_t c = 64
    while c < cap * 2:
        c *= 2
    t.cap = c
    t.count = 0
    t.slots = <int64_t*> malloc(c * sizeof(int64_t))
    if t.slots == NULL:
        raise MemoryError()
    memset(t.slots, 0xff, c * sizeof(int64_t))
    return 0


cdef void table_free(Table* t) noexcept:
    free(t.slots)
    t.slots = NULL


cdef int table_rehash(Table* t, Buf* b) except -1:
    cdef int64_t old_cap = t.cap
    cdef int64_t* old = t.slots
    cdef int64_t s, idx, pos, mask
    t.cap = old_cap * 2
    t.slots = <int64_t*> malloc(t.cap * sizeof(int64_t))
    if t.slots == NULL:
        t.slots = old
        t.cap = old_cap
        raise MemoryError()
    memset(t.slots, 0xff, t.cap * sizeof(int64_t))
    mask = t.cap - 1
    for s in range(old_cap):
        idx = old[s]
        if idx >= 0:
            pos = <int64_t>(key_hash(b, idx) & <uint64_t>mask)
            while t.slots[pos] >= 0:
                pos = (pos + 1) & mask
            t.slots[pos] = idx
    free(old)
    return 0


cdef int64_t table_slot(Table* t, Buf* b, int64_t x) noexcept nogil:
    """Slot holding a node with the same key as ``x``, or the empty slot where it belongs."""
    cdef int64_t mask = t.cap - 1
    cdef int64_t pos = <int64_t>(key_hash(b, x) & <uint64_t>mask)
    cdef int64_t idx
    while True:
        idx = t.slots[pos]
        if idx < 0 or key_eq(b, idx, x):
            return pos
        pos = (pos + 1) & mask


cdef struct Ctx:
    int n
    int W
    const double* c
    const double* tin
    const double* tmid
    const double* tout


cdef enum:
    MAXPARTIALS = 64


cdef double exact_sum(const double* v, int m) noexcept nogil:
    # Shewchuk partials with the same final rounding as math.fsum.
    cdef double p[MAXPARTIALS]
    cdef int np_ = 0, i, q, k
    cdef double x, y, t, hi = 0.0, lo = 0.0, yr
    for k in range(m):
        x = v[k]
        i = 0
        for q in range(np_):
            y = p[q]
            if (x if x >= 0 else -x) < (y if y >= 0 else -y):
                t = x
                x = y
                y = t
            hi = x + y
            lo = y - (hi - x)
            if lo != 0.0:
                p[i] = lo
                i += 1
            x = hi
        p[i] = x
        np_ = i + 1
    if np_ == 0:
        return 0.0
    q = np_ - 1
    hi = p[q]
    lo = 0.0
    while q > 0:
        x = hi
        q -= 1
        y = p[q]
        hi = x + y
        yr = hi - x
        lo = y - yr
        if lo != 0.0:
            break
    if q > 0 and ((lo < 0 and p[q - 1] < 0) or (lo > 0 and p[q - 1] > 0)):
        y = lo * 2
        x = hi + y
        yr = x - hi
        if y == yr:
            hi = x
    return hi


cdef inline double line_sum(const double* t, const uint64_t* U, int W, int a, int b) noexcept nogil:
    cdef uint64_t tmp[MAXW]
    cdef double vals[64 * MAXW]
    cdef int w, base, m = 0
    cdef uint64_t word
    for w in range(W):
        tmp[w] = U[w]
    tmp[a >> 6] |= (<uint64_t>1) << (a & 63)
    tmp[b >> 6] |= (<uint64_t>1) << (b & 63)
    for w in range(W):
        word = tmp[w]
        base = w * 64
        while word:
            vals[m] = t[base + __builtin_ctzll(word)]
            m += 1
            word &= word - 1
    return exact_sum(vals, m)


cdef inline double dual(Ctx* x, const uint64_t* U, int i, int j, int f) noexcept nogil:
    cdef double a = line_sum(x.tin, U, x.W, f, 0)
    cdef double b = line_sum(x.tmid, U, x.W, j, 0)
    cdef double c = line_sum(x.tout, U, x.W, i, j)
    # max(a, b, c) with Python's first-wins tie rule
    if b > a:
        a = b
    if c > a:
        a = c
    return a


cdef inline int cmp_nodes(Buf* b, int64_t x, int64_t y) noexcept nogil:
    """Order by (g + h, -g, U, i, j, f) ascending; U compared as an integer."""
    cdef double fx = b.g[x] + b.h[x]
    cdef double fy = b.g[y] + b.h[y]
    cdef int w
    cdef uint64_t ux, uy
    if fx < fy:
        return -1
    if fx > fy:
        return 1
    if b.g[x] > b.g[y]:
        return -1
    if b.g[x] < b.g[y]:
        return 1
    for w in range(b.W - 1, -1, -1):
        ux = b.U[x * b.W + w]
        uy = b.U[y * b.W + w]
        if ux < uy:
            return -1
        if ux > uy:
            return 1
    if b.i[x] != b.i[y]:
        return -1 if b.i[x] < b.i[y] else 1
    if b.j[x] != b.j[y]:
        return -1 if b.j[x] < b.j[y] else 1
    if b.f[x] != b.f[y]:
        return -1 if b.f[x] < b.f[y] else 1
    return 0


cdef Buf* _sort_buf = NULL


cdef int _qsort_cmp(const void* a, const void* b) noexcept nogil:
    return cmp_nodes(_sort_buf, (<const int64_t*>a)[0], (<const int64_t*>b)[0])


cdef void ctx_setup(Ctx* x, const double[:, :, ::1] costs, const double[::1] tin, const double[::1] tmid, const double[::1] tout):
    x.n = costs.shape[0]
    x.W = (x.n + 63) // 64
    x.c = &costs[0, 0, 0]
    x.tin = &tin[0]
    x.tmid = &tmid[0]
    x.tout = &tout[0]


def _arrays(costs, in_min, mid_min, out_min):
    n = costs.shape[0]
    if n > MAX_N:
        raise ValueError(f"compiled kernels support n <= {MAX_N}")
    return (np.ascontiguousarray(costs, dtype=np.float64),
            np.ascontiguousarray(in_min, dtype=np.float64),
            np.ascontiguousarray(mid_min, dtype=np.float64),
            np.ascontiguousarray(out_min, dtype=np.float64))


cdef tuple _tour(int64_t* parent, int16_t* jv, int64_t idx, int last):
    seq = [last]
    while idx > 0:
        seq.append(jv[idx])
        idx = parent[idx]
    seq.append(0)
    seq.reverse()
    return tuple(seq)


def cabs_pass(costs, in_min, mid_min, out_min, int64_t width, double incumbent, int64_t node_cap,
              int64_t expansions, int64_t expansion_limit, stop_check, on_improve):
    costs, in_min, mid_min, out_min = _arrays(costs, in_min, mid_min, out_min)
    cdef Ctx x
    ctx_setup(&x, costs, in_min, mid_min, out_min)
    cdef int n = x.n, W = x.W
    cdef Buf layer, cand
    cdef Table table
    cdef int64_t* hist_parent = NULL
    cdef int16_t* hist_j = NULL
    cdef int64_t hist_n = 1, hist_cap = 1024
    cdef int64_t* order = NULL
    cdef int64_t p, q, s, slot, idx, keep, stored = 1
    cdef int i, j, f, k, w, code = DONE
    cdef uint64_t word, low
    cdef uint64_t* Up
    cdef uint64_t* Uc
    cdef double g, g2, h, total
    cdef bint dropped = False, empty
    cdef double min_drop = float("inf")
    cdef const double* c = x.c
    cdef int64_t nn = <int64_t>n * n
    global _sort_buf

    buf_init(&layer, W, 16)
    buf_init(&cand, W, 1024)
    table.slots = NULL
    try:
        hist_parent = <int64_t*> malloc(hist_cap * sizeof(int64_t))
        hist_j = <int16_t*> malloc(hist_cap * sizeof(int16_t))
        if hist_parent == NULL or hist_j == NULL:
            raise MemoryError()
        hist_parent[0] = -1
        hist_j[0] = 0
        # root
        buf_push(&layer)
        for w in range(W):
            layer.U[w] = 0
        for k in range(1, n):
            layer.U[k >> 6] |= (<uint64_t>1) << (k & 63)
        layer.i[0] = 0; layer.j[0] = 0; layer.f[0] = 0
        layer.g[0] = 0.0; layer.h[0] = 0.0; layer.parent[0] = 0
        table_init(&table, 1024)

        while layer.n > 0:
            cand.n = 0
            memset(table.slots, 0xff, table.cap * sizeof(int64_t))
            table.count = 0
            for p in range(layer.n):
                if expansion_limit >= 0 and expansions >= expansion_limit:
                    code = STOPPED
                    break
                if expansions % CHECK_EVERY == 0 and stop_check(expansions):
                    code = STOPPED
                    break
                expansions += 1
                Up = &layer.U[p * W]
                i = layer.i[p]; j = layer.j[p]; f = layer.f[p]; g = layer.g[p]
                for w in range(W):
                    word = Up[w]
                    while word:
                        k = w * 64 + __builtin_ctzll(word)
                        low = word & (~word + 1)
                        word ^= low
                        if j != 0:
                            g2 = g + c[i * nn + j * n + k]
                            empty = True
                            for s in range(W):
                                if (Up[s] ^ (low if s == w else 0)) != 0:
                                    empty = False
                                    break
                            if empty:
                                total = g2 + c[k * nn + f] + c[j * nn + k * n]
                                if total < incumbent - TOL:
                                    incumbent = total
                                    on_improve(_tour(hist_parent, hist_j, layer.parent[p], k), total, expansions)
                                continue
                        else:
                            g2 = g
                        q = buf_push(&cand)
                        Uc = &cand.U[q * W]
                        memcpy(Uc, Up, W * sizeof(uint64_t))
                        Uc[w] ^= low
                        if j == 0:
                            cand.i[q] = 0; cand.j[q] = k; cand.f[q] = k
                        else:
                            cand.i[q] = j; cand.j[q] = k; cand.f[q] = f
                        h = dual(&x, Uc, cand.i[q], cand.j[q], cand.f[q])
                        if g2 + h >= incumbent - TOL:
                            cand.n -= 1
                            continue
                        cand.g[q] = g2; cand.h[q] = h; cand.parent[q] = layer.parent[p]
                        slot = table_slot(&table, &cand, q)
                        idx = table.slots[slot]
                        if idx >= 0:
                            cand.n -= 1
                            if g2 < cand.g[idx]:
                                cand.g[idx] = g2
                                cand.h[idx] = h
                                cand.parent[idx] = layer.parent[p]
                            continue
                        table.slots[slot] = q
                        table.count += 1
                        if table.count * 2 > table.cap:
                            table_rehash(&table, &cand)
                        stored += 1
                        if node_cap >= 0 and stored > node_cap:
                            code = MEMORY
                            break
                    if code != DONE:
                        break
                if code != DONE:
                    break
            if code != DONE or cand.n == 0:
                break

            free(order)
            order = <int64_t*> malloc(cand.n * sizeof(int64_t))
            if order == NULL:
                raise MemoryError()
            for q in range(cand.n):
                order[q] = q
            _sort_buf = &cand
            qsort(order, cand.n, sizeof(int64_t), _qsort_cmp)
            _sort_buf = NULL
            keep = cand.n
            if keep > width:
                dropped = True
                idx = order[width]
                if cand.g[idx] + cand.h[idx] < min_drop:
                    min_drop = cand.g[idx] + cand.h[idx]
                stored -= keep - width
                keep = width

            if hist_n + keep > hist_cap:
                while hist_n + keep > hist_cap:
                    hist_cap *= 2
                hist_parent = <int64_t*> _grow(hist_parent, hist_cap * sizeof(int64_t))
                hist_j = <int16_t*> _grow(hist_j, hist_cap * sizeof(int16_t))
            layer.n = 0
            for q in range(keep):
                idx = order[q]
                p = buf_push(&layer)
                memcpy(&layer.U[p * W], &cand.U[idx * W], W * sizeof(uint64_t))
                layer.i[p] = cand.i[idx]; layer.j[p] = cand.j[idx]; layer.f[p] = cand.f[idx]
                layer.g[p] = cand.g[idx]; layer.h[p] = cand.h[idx]
                hist_parent[hist_n] = cand.parent[idx]
                hist_j[hist_n] = cand.j[idx]
                layer.parent[p] = hist_n
                hist_n += 1
    finally:
        _sort_buf = NULL
        free(order)
        free(hist_parent)
        free(hist_j)
        table_free(&table)
        buf_free(&layer)
        buf_free(&cand)
    return code, expansions, incumbent, dropped, min_drop


# --- best-first search ------------------------------------------------------

cdef struct Heap:
    int64_t* a
    int64_t n
    int64_t cap


cdef int heap_push(Heap* hp, Buf* b, int64_t v) except -1:
    cdef int64_t pos, parent
    if hp.n == hp.cap:
        hp.cap *= 2
        hp.a = <int64_t*> _grow(hp.a, hp.cap * sizeof(int64_t))
    pos = hp.n
    hp.n += 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if heap_less(b, v, hp.a[parent]):
            hp.a[pos] = hp.a[parent]
            pos = parent
        else:
            break
    hp.a[pos] = v
    return 0


cdef inline bint heap_less(Buf* b, int64_t x, int64_t y) noexcept nogil:
    cdef int r = cmp_nodes(b, x, y)
    if r != 0:
        return r < 0
    return x < y


cdef int64_t heap_pop(Heap* hp, Buf* b) noexcept nogil:
    cdef int64_t top = hp.a[0]
    cdef int64_t last, pos, child
    hp.n -= 1
    if hp.n == 0:
        return top
    last = hp.a[hp.n]
    pos = 0
    while True:
        child = 2 * pos + 1
        if child >= hp.n:
            break
        if child + 1 < hp.n and heap_less(b, hp.a[child + 1], hp.a[child]):
            child += 1
        if heap_less(b, hp.a[child], last):
            hp.a[pos] = hp.a[child]
            pos = child
        else:
            break
    hp.a[pos] = last
    return top


def exact_search(costs, in_min, mid_min, out_min, bint prune, double incumbent, int64_t node_cap,
                 int64_t expansions, int64_t expansion_limit, stop_check, on_improve, on_bound):
    costs, in_min, mid_min, out_min = _arrays(costs, in_min, mid_min, out_min)
    cdef Ctx x
    ctx_setup(&x, costs, in_min, mid_min, out_min)
    cdef int n = x.n, W = x.W
    cdef Buf nodes
    cdef Table table
    cdef Heap hp
    cdef int64_t nid, q, slot, old, s
    cdef int i, j, f, k, w, code = DONE
    cdef uint64_t word, low
    cdef uint64_t* Up
    cdef uint64_t* Uc
    cdef double g, g2, h, total, top, lb, dual_lb
    cdef bint empty
    cdef const double* c = x.c
    cdef int64_t nn = <int64_t>n * n

    buf_init(&nodes, W, 1024)
    table.slots = NULL
    hp.a = NULL
    try:
        table_init(&table, 1024)
        hp.cap = 1024
        hp.n = 0
        hp.a = <int64_t*> malloc(hp.cap * sizeof(int64_t))
        if hp.a == NULL:
            raise MemoryError()
        buf_push(&nodes)
        for w in range(W):
            nodes.U[w] = 0
        for k in range(1, n):
            nodes.U[k >> 6] |= (<uint64_t>1) << (k & 63)
        nodes.i[0] = 0; nodes.j[0] = 0; nodes.f[0] = 0
        nodes.g[0] = 0.0; nodes.parent[0] = -1
        nodes.h[0] = dual(&x, nodes.U, 0, 0, 0)
        dual_lb = nodes.h[0]
        table.slots[table_slot(&table, &nodes, 0)] = 0
        table.count = 1
        heap_push(&hp, &nodes, 0)

        while hp.n > 0:
            top = nodes.g[hp.a[0]] + nodes.h[hp.a[0]]
            if prune and top >= incumbent - TOL:
                dual_lb = incumbent
                break
            if expansion_limit >= 0 and expansions >= expansion_limit:
                code = STOPPED
                break
            if expansions % CHECK_EVERY == 0:
                lb = top if top < incumbent else incumbent
                if lb > dual_lb:
                    dual_lb = lb
                    on_bound(dual_lb, expansions)
                if stop_check(expansions):
                    code = STOPPED
                    break
            nid = heap_pop(&hp, &nodes)
            if table.slots[table_slot(&table, &nodes, nid)] != nid:
                continue
            expansions += 1
            Up = &nodes.U[nid * W]
            i = nodes.i[nid]; j = nodes.j[nid]; f = nodes.f[nid]; g = nodes.g[nid]
            for w in range(W):
                word = Up[w]
                while word:
                    k = w * 64 + __builtin_ctzll(word)
                    low = word & (~word + 1)
                    word ^= low
                    if j != 0:
                        g2 = g + c[i * nn + j * n + k]
                        empty = True
                        for s in range(W):
                            if (Up[s] ^ (low if s == w else 0)) != 0:
                                empty = False
                                break
                        if empty:
                            total = g2 + c[k * nn + f] + c[j * nn + k * n]
                            if total < incumbent - TOL:
                                incumbent = total
                                on_improve(_tour(nodes.parent, nodes.j, nid, k), total, expansions)
                            continue
                    else:
                        g2 = g
                    q = buf_push(&nodes)
                    # buf_push may reallocate
                    Up = &nodes.U[nid * W]
                    Uc = &nodes.U[q * W]
                    memcpy(Uc, Up, W * sizeof(uint64_t))
                    Uc[w] ^= low
                    if j == 0:
                        nodes.i[q] = 0; nodes.j[q] = k; nodes.f[q] = k
                    else:
                        nodes.i[q] = j; nodes.j[q] = k; nodes.f[q] = f
                    h = dual(&x, Uc, nodes.i[q], nodes.j[q], nodes.f[q])
                    if prune and g2 + h >= incumbent - TOL:
                        nodes.n -= 1
                        continue
                    nodes.g[q] = g2; nodes.h[q] = h; nodes.parent[q] = nid
                    slot = table_slot(&table, &nodes, q)
                    old = table.slots[slot]
                    if old >= 0 and nodes.g[old] <= g2:
                        nodes.n -= 1
                        continue
                    if node_cap >= 0 and q + 1 > node_cap:
                        nodes.n -= 1
                        code = MEMORY
                        break
                    table.slots[slot] = q
                    if old < 0:
                        table.count += 1
                        if table.count * 2 > table.cap:
                            table_rehash(&table, &nodes)
                    heap_push(&hp, &nodes, q)
                if code != DONE:
                    break
            if code != DONE:
                break
        else:
            dual_lb = incumbent
    finally:
        free(hp.a)
        table_free(&table)
        buf_free(&nodes)
    return code, expansions, incumbent, dual_lb
