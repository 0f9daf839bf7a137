import math

import numpy as np
import pytest

from qtsp.didp.model import (
    State,
    bits,
    dual_bound,
    expand,
    mask_of,
    precompute_bound_tables,
    reachable_states,
    terminal_cost,
)
from qtsp.instance import Instance, generate_instance
from qtsp.oracle import brute_force_completion


def _naive_tables(inst):
    n = inst.n
    c = inst.costs
    in_min = [math.inf] * n
    mid_min = [math.inf] * n
    out_min = [math.inf] * n
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if len({i, j, k}) == 3:
                    v = float(c[i, j, k])
                    out_min[i] = min(out_min[i], v)
                    mid_min[j] = min(mid_min[j], v)
                    in_min[k] = min(in_min[k], v)
    return in_min, mid_min, out_min


def test_bits_and_mask():
    assert bits(0b10110) == [1, 2, 4]
    assert mask_of([4, 1, 2]) == 0b10110
    assert State.root(4) == State(0b1110, 0, 0, 0)
    assert State.root(4).unvisited() == [1, 2, 3]


def test_tables_constant():
    t = precompute_bound_tables(Instance.constant(5, 3.0))
    for arr in (t.in_min, t.mid_min, t.out_min):
        assert np.all(arr == 3.0)


@pytest.mark.parametrize("kind", ["angle", "angledistance"])
def test_tables_match_triple_loop(kind):
    inst = generate_instance(5, 2, kind)
    t = precompute_bound_tables(inst)
    ref = _naive_tables(inst)
    assert list(t.in_min) == ref[0]
    assert list(t.mid_min) == ref[1]
    assert list(t.out_min) == ref[2]


def test_tables_single_zero():
    c = np.ones((5, 5, 5))
    c[1, 2, 3] = 0.0
    t = precompute_bound_tables(Instance.from_costs(c))
    assert t.in_min[3] == 0 and t.mid_min[2] == 0 and t.out_min[1] == 0
    assert t.in_min[1] == 1 and t.out_min[3] == 1


def test_dual_bound_constant_state():
    inst = Instance.constant(5, 2.0)
    state = State(mask_of([3, 4]), 1, 2, 1)
    t = precompute_bound_tables(inst)
    assert dual_bound(state, t) == 8.0 == brute_force_completion(inst, state)


def test_dual_bound_zero_tensor():
    inst = Instance.from_costs(np.zeros((6, 6, 6)))
    t = precompute_bound_tables(inst)
    assert all(dual_bound(s, t) == 0.0 for s in reachable_states(6))


def test_dual_bound_root_counts_n_terms():
    inst = Instance.constant(7, 1.5)
    assert dual_bound(State.root(7), precompute_bound_tables(inst)) == 7 * 1.5


def test_expand_root():
    inst = generate_instance(4, 1)
    succ = expand(State.root(4), inst)
    assert succ == [(State(mask_of([2, 3]), 0, 1, 1), 0.0), (State(mask_of([1, 3]), 0, 2, 2), 0.0),
                    (State(mask_of([1, 2]), 0, 3, 3), 0.0)]


def test_expand_single_choice():
    inst = generate_instance(4, 1)
    succ = expand(State(mask_of([3]), 1, 2, 1), inst)
    assert succ == [(State(0, 2, 3, 1), float(inst.costs[1, 2, 3]))]


def test_terminal():
    inst = generate_instance(4, 1)
    c = inst.costs
    s = State(0, 2, 3, 1)
    assert expand(s, inst) == []
    assert terminal_cost(s, inst) == float(c[3, 0, 1]) + float(c[2, 3, 0])
    assert terminal_cost(State(mask_of([3]), 1, 2, 1), inst) is None


def test_reachable_state_count():
    # Root, n-1 first moves, then (U, i, j, f) with distinct i, j, f except i = f at depth 2.
    states = list(reachable_states(5))
    assert len(states) == len(set(states))
    assert all(s.is_valid(5) for s in states)
    assert sum(1 for s in states if s.U == 0) == 4 * 3 * 2


@pytest.mark.parametrize("n", [5, 6, 7])
def test_admissibility_sweep(n):
    inst = generate_instance(n, 11, "angledistance")
    t = precompute_bound_tables(inst)
    for s in reachable_states(n):
        assert dual_bound(s, t) <= brute_force_completion(inst, s)
