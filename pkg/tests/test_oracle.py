import itertools
import math

import numpy as np
import pytest

from qtsp.didp.model import State, expand, mask_of, terminal_cost
from qtsp.errors import SizeGuardError
from qtsp.instance import Instance, generate_instance, tour_cost
from qtsp.oracle import brute_force_completion, brute_force_optimal

# Optimal costs from a separate mpmath cost evaluation and naive enumeration.
GOLDEN = {
    (6, 1, "angle"): (8416.18066990229, (0, 1, 3, 2, 4, 5)),
    (7, 3, "angledistance"): (152309.6347009508, (0, 5, 4, 2, 1, 3, 6)),
    (7, 3, "angle"): (9030.70445854869, (0, 5, 4, 2, 1, 3, 6)),
    (8, 2, "angle"): (7908.906101130372, (0, 1, 6, 4, 5, 2, 3, 7)),
    (8, 2, "angledistance"): (144346.60396181187, (0, 1, 6, 4, 5, 2, 3, 7)),
}


@pytest.mark.parametrize("key", sorted(GOLDEN))
def test_golden_optima(key):
    cost, order = GOLDEN[key]
    tour, got = brute_force_optimal(generate_instance(*key))
    assert got == cost
    assert tour.order == order


def test_constant_tie_break():
    tour, cost = brute_force_optimal(Instance.constant(4, 1.0))
    assert cost == 4.0 and tour.order == (0, 1, 2, 3)


def test_n3_symmetric():
    tour, _ = brute_force_optimal(generate_instance(3, 9))
    assert tour.order == (0, 1, 2)


def test_size_guard():
    with pytest.raises(SizeGuardError):
        brute_force_optimal(Instance.constant(13, 1.0))


def test_matches_naive_enumeration():
    inst = generate_instance(6, 4, "angledistance")
    c = inst.costs
    best = min(
        math.fsum(c[t[p - 1], t[p], t[(p + 1) % 6]] for p in range(6))
        for t in ((0,) + r for r in itertools.permutations(range(1, 6)))
    )
    assert brute_force_optimal(inst)[1] == best


def test_shift_monotonicity():
    inst = generate_instance(6, 2)
    delta = 7.25
    shifted = Instance.from_costs(inst.costs + delta)
    t0, c0 = brute_force_optimal(inst)
    t1, c1 = brute_force_optimal(shifted)
    assert c1 == pytest.approx(c0 + 6 * delta, abs=1e-9)
    assert t0 == t1


def test_completion_terminal_example():
    inst = generate_instance(5, 1)
    c = inst.costs
    state = State(0, 2, 3, 1)
    assert brute_force_completion(inst, state) == math.fsum([c[3, 0, 1], c[2, 3, 0]])
    assert terminal_cost(state, inst) == brute_force_completion(inst, state)


def test_completion_counts_terms():
    inst = Instance.constant(5, 2.0)
    assert brute_force_completion(inst, State(mask_of([3, 4]), 1, 2, 1)) == 8.0


def test_completion_root_equals_optimum():
    for seed in range(3):
        inst = generate_instance(7, seed, "angledistance")
        assert brute_force_completion(inst, State.root(7)) == brute_force_optimal(inst)[1]


def test_completion_size_guard():
    with pytest.raises(SizeGuardError):
        brute_force_completion(Instance.constant(12, 1.0), State.root(12))


def test_optimum_is_reachable_by_expand():
    inst = generate_instance(6, 1)
    _, best = brute_force_optimal(inst)
    # Depth-first walk over the DP graph collects every complete path cost.
    costs = []

    def walk(s, g):
        term = terminal_cost(s, inst)
        if term is not None:
            costs.append(g + term)
            return
        for succ, w in expand(s, inst):
            walk(succ, g + w)

    walk(State.root(6), 0.0)
    assert len(costs) == math.factorial(5)
    assert min(costs) == pytest.approx(best, abs=1e-9)
    assert np.isclose(sorted(costs)[0], tour_cost(inst, brute_force_optimal(inst)[0]))
