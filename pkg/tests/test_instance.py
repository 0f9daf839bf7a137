import math

import mpmath
import numpy as np
import pytest

from qtsp.errors import DegenerateGeometryError, InvalidArgumentError, InvalidTourError
from qtsp.instance import (
    Instance,
    Tour,
    build_angle_costs,
    build_angle_distance_costs,
    cycle_cost,
    generate_instance,
    generate_points,
    normalize_kind,
    round12,
    tour_cost,
    turning_angle,
    validate_tour,
)


def _hp_round12(value) -> float:
    """Round a high-precision value half-even to 12 decimals."""
    with mpmath.workdps(60):
        scaled = mpmath.mpf(value) * 10**12
        nearest = int(mpmath.nint(scaled))  # nint rounds ties to even
        return float(mpmath.mpf(nearest) / 10**12)


def test_independent_values_frozen():
    # High-precision references for the perpendicular and 3-4-5 triples.
    with mpmath.workdps(60):
        assert _hp_round12(1000 * mpmath.pi / 2) == 1570.796326794897
        assert _hp_round12(100 * (40 * mpmath.pi / 2 + mpmath.mpf(7) / 2)) == 6633.185307179586


def test_generate_points_postconditions():
    pts = generate_points(5, 42)
    assert len(pts) == 5 and len(set(pts)) == 5
    assert all(0 <= x <= 500 and 0 <= y <= 500 for x, y in pts)
    assert pts == generate_points(5, 42)
    assert pts == [(42, 194), (348, 473), (394, 368), (435, 389), (298, 349)]


def test_generate_points_distribution():
    pts = generate_points(200, 7)
    assert len(set(pts)) == 200
    coords = [c for p in pts for c in p]
    sigma = math.sqrt((501**2 - 1) / 12) / math.sqrt(len(coords))
    assert abs(sum(coords) / len(coords) - 250) < 3 * sigma


@pytest.mark.parametrize("n", [0, 1, 2])
def test_generate_points_too_small(n):
    with pytest.raises(InvalidArgumentError):
        generate_points(n, 0)


@pytest.mark.parametrize("c,expected", [((2, 0), 0.0), ((1, 1), math.pi / 2), ((0, 0), math.pi)])
def test_turning_angle(c, expected):
    assert turning_angle((0, 0), (1, 0), c) == pytest.approx(expected, abs=1e-15)


def test_turning_angle_degenerate():
    with pytest.raises(DegenerateGeometryError):
        turning_angle((0, 0), (0, 0), (1, 1))


def test_angle_costs_examples():
    c = build_angle_costs([(0, 0), (1, 0), (2, 0), (1, 1)])
    assert c[0, 1, 2] == 0.0
    assert c[0, 1, 3] == 1570.796326794897
    assert c[2, 1, 0] == 0.0
    assert np.all(c >= 0)


def test_angle_distance_examples():
    c = build_angle_distance_costs([(0, 0), (3, 0), (3, 4)], rho=40)
    assert c[0, 1, 2] == 6633.185307179586
    assert c[2, 1, 0] == 6633.185307179586
    d = build_angle_distance_costs([(0, 0), (1, 0), (2, 0)], rho=40)
    assert d[0, 1, 2] == 100.0


def test_duplicate_points_rejected():
    with pytest.raises(DegenerateGeometryError):
        build_angle_costs([(0, 0), (1, 0), (0, 0)])
    with pytest.raises(DegenerateGeometryError):
        build_angle_distance_costs([(0, 0), (1, 0), (1, 0)])


def test_negative_rho_rejected():
    with pytest.raises(InvalidArgumentError):
        build_angle_distance_costs([(0, 0), (1, 0), (1, 1)], rho=-1)


@pytest.mark.parametrize("kind", ["angle", "angledistance"])
def test_costs_are_12_decimal(kind):
    inst = generate_instance(8, 5, kind)
    for i, j, k in inst.triples():
        v = float(inst.costs[i, j, k])
        assert round12(v) == v
        assert float(format(v, ".12f")) == v


def test_reversal_symmetry_n12():
    for kind in ("angle", "angledistance"):
        c = generate_instance(12, 3, kind).costs
        assert np.array_equal(c, c.transpose(2, 1, 0))


def test_diagonal_is_zero():
    c = generate_instance(6, 1).costs
    for i in range(6):
        for j in range(6):
            assert c[i, i, j] == c[i, j, i] == c[j, i, i] == 0.0


def test_costs_read_only():
    inst = generate_instance(5, 1)
    with pytest.raises(ValueError):
        inst.costs[0, 1, 2] = 1.0


def test_tour_cost_examples():
    assert tour_cost(Instance.constant(5, 1.0), [0, 3, 1, 4, 2]) == 5.0
    assert tour_cost(Instance.from_costs(np.zeros((5, 5, 5))), [0, 1, 2, 3, 4]) == 0.0


def test_tour_cost_matches_manual_sum():
    inst = generate_instance(6, 1)
    t = [0, 2, 5, 1, 4, 3]
    c = inst.costs
    manual = math.fsum(c[t[p - 1], t[p], t[(p + 1) % 6]] for p in range(6))
    assert tour_cost(inst, t) == manual


def test_tour_cost_rejects_invalid():
    inst = generate_instance(5, 1)
    with pytest.raises(InvalidTourError):
        tour_cost(inst, [0, 1, 2, 3])
    with pytest.raises(InvalidTourError):
        tour_cost(inst, [0, 1, 1, 3, 4])


def test_rotation_and_reversal_invariance():
    inst = generate_instance(7, 2, "angledistance")
    cyc = [0, 4, 2, 6, 1, 5, 3]
    base = cycle_cost(inst, cyc)
    for r in range(7):
        assert cycle_cost(inst, cyc[r:] + cyc[:r]) == base
    assert tour_cost(inst, Tour(cyc).reversed()) == base


def test_validate_tour_examples():
    assert validate_tour(4, [0, 1, 2, 3]) == []
    kinds = {v.kind for v in validate_tour(4, [1, 0, 2, 3])}
    assert kinds == {"wrong-start"}
    kinds = {v.kind for v in validate_tour(4, [0, 1, 1, 3])}
    assert kinds == {"duplicate", "missing"}
    assert {v.kind for v in validate_tour(4, [0, 1, 2])} >= {"wrong-length"}
    assert {v.kind for v in validate_tour(4, [0, 1, 2, 9])} >= {"out-of-range"}


def test_tour_from_cycle_canonicalizes():
    assert Tour.from_cycle([2, 3, 0, 1]).order == (0, 1, 2, 3)
    assert Tour([0, 1, 2]).reversed().order == (0, 2, 1)


def test_instance_equality_and_kinds():
    a = generate_instance(5, 42)
    b = generate_instance(5, 42)
    assert a == b
    assert a != generate_instance(5, 43)
    assert normalize_kind("angle-distance") == "angledistance"
    with pytest.raises(InvalidArgumentError):
        normalize_kind("euclid")


def test_from_costs_validation():
    with pytest.raises(InvalidArgumentError):
        Instance.from_costs(np.zeros((3, 3)))
    with pytest.raises(InvalidArgumentError):
        Instance.from_costs(-np.ones((3, 3, 3)))
