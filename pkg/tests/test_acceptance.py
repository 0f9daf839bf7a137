"""Acceptance criteria 1-10, one test each.

A summary line per criterion is printed at the end of the session (see
``conftest.py``). Tolerances are the ones the criteria state.
"""

import itertools
import random
import time
from functools import lru_cache

import mpmath
import numpy as np

from qtsp.cli import main
from qtsp.didp import Budget, precompute_bound_tables, solve_cabs, solve_exact
from qtsp.didp.model import dual_bound, expand, reachable_states, terminal_cost
from qtsp.didp.trace import AnytimeTrace, TraceEvent
from qtsp.instance import build_angle_costs, build_angle_distance_costs, generate_instance, tour_cost
from qtsp.metrics import RunRecord, aggregate_report, optimality_gap, primal_integral
from qtsp.models import MilpAssignment, assignment_from_tour, check_milp, check_miqp, eval_cp, eval_miqp_objective
from qtsp.oracle import brute_force_completion, brute_force_optimal

KINDS = ("angle", "angledistance")
TOL = 1e-9


def suite():
    """50 instances per kind: ten seeds for each n in 5..9."""
    return [(n, seed, kind) for kind in KINDS for n in range(5, 10) for seed in range(10)]


@lru_cache(maxsize=None)
def instance(n, seed, kind):
    return generate_instance(n, seed, kind)


@lru_cache(maxsize=None)
def optimum(n, seed, kind):
    return brute_force_optimal(instance(n, seed, kind))[1]


def test_criterion_01_oracle_equivalence():
    start = time.monotonic()
    bad = []
    for key in suite():
        inst, best = instance(*key), optimum(*key)
        for r in (solve_exact(inst), solve_cabs(inst)):
            if r.status != "optimal" or abs(r.cost - best) > TOL:
                bad.append((key, r.solver, r.cost, best))
    elapsed = time.monotonic() - start
    assert bad == []
    assert elapsed < 600


def _small_sweep():
    return [(5 + s % 3, s, kind) for kind in KINDS for s in range(10)]


def test_criterion_02_dual_bound_admissibility():
    violations = 0
    checked = 0
    for key in _small_sweep():
        inst = instance(*key)
        tables = precompute_bound_tables(inst)
        for s in reachable_states(inst.n):
            checked += 1
            if dual_bound(s, tables) > brute_force_completion(inst, s):
                violations += 1
    assert checked > 0 and violations == 0


def test_criterion_03_bellman_consistency():
    worst = 0.0
    for key in _small_sweep():
        inst = instance(*key)
        for s in reachable_states(inst.n):
            if terminal_cost(s, inst) is not None:
                continue
            succ = [w + brute_force_completion(inst, t) for t, w in expand(s, inst)]
            worst = max(worst, abs(brute_force_completion(inst, s) - min(succ)))
    assert worst <= TOL


def test_criterion_04_encoding_equivalence():
    rng = random.Random(2024)
    mismatches = []
    for idx in range(100):
        n = 4 + idx % 6
        inst = instance(n, idx, KINDS[idx % 2])
        order = [0] + rng.sample(range(1, n), n - 1)
        a = assignment_from_tour(inst, order)
        milp, miqp, cp = check_milp(inst, a), check_miqp(inst, a), eval_cp(inst, order)
        values = {tour_cost(inst, order), milp.objective, eval_miqp_objective(inst, a), miqp.objective, cp.objective}
        if len(values) != 1 or not (milp.feasible and miqp.feasible and cp.feasible):
            mismatches.append((n, order, values))
    assert mismatches == []


def _two_cycle_splits(n):
    """Every split of 0..n-1 into two directed cycles of length >= 3."""
    others = list(range(1, n))
    for a in range(3, n - 2):
        for rest in itertools.combinations(others, a - 1):
            side_b = [v for v in others if v not in rest]
            for pa in itertools.permutations(rest):
                head, *tail = side_b
                for pb in itertools.permutations(tail):
                    yield [0, *pa], [head, *pb]


def test_criterion_05_subtour_rejection():
    checked = escaped = 0
    for n in (6, 7, 8):
        inst = instance(n, 0, "angle")
        for ca, cb in _two_cycle_splits(n):
            checked += 1
            report = check_milp(inst, MilpAssignment.from_cycles(n, [ca, cb]))
            if not any(v.constraint == "dl" for v in report.violations):
                escaped += 1
    assert checked > 0 and escaped == 0


def test_criterion_06_cost_fidelity():
    with mpmath.workdps(60):
        perpendicular = float(mpmath.nint(1000 * mpmath.pi / 2 * 10**12) / 10**12)
        three_four_five = float(mpmath.nint(100 * (40 * mpmath.pi / 2 + mpmath.mpf(7) / 2) * 10**12) / 10**12)
    # Frozen high-precision references.
    assert perpendicular == 1570.796326794897
    assert three_four_five == 6633.185307179586
    angle = build_angle_costs([(0, 0), (1, 0), (2, 0), (1, 1)])
    assert angle[0, 1, 2] == 0.0
    assert angle[0, 1, 3] == perpendicular
    assert build_angle_distance_costs([(0, 0), (3, 0), (3, 4)], rho=40)[0, 1, 2] == three_four_five
    for kind in KINDS:
        c = instance(10, 0, kind).costs
        assert all(c[i, j, k] == c[k, j, i] for i, j, k in instance(10, 0, kind).triples())


def test_criterion_07_anytime_contract():
    late, broken = [], []
    for kind in KINDS:
        for seed in range(10):
            inst = generate_instance(50, seed, kind)
            r = solve_cabs(inst, Budget(time_limit=5.0), max_passes=6)
            incs = r.trace.incumbents()
            if not incs or incs[0][0] > 5.0:
                late.append((kind, seed))
            if r.trace.check():
                broken.append((kind, seed, r.trace.check()))
    assert late == [] and broken == []


def test_criterion_08_small_optimality():
    failures = []
    for n in (5, 10, 15):
        for seed in range(10):
            r = solve_cabs(generate_instance(n, seed, "angle"), Budget(time_limit=60.0))
            if r.status != "optimal":
                failures.append((n, seed, r.status, r.elapsed))
    assert failures == []


def test_criterion_09_metrics():
    assert abs(optimality_gap(100, 80) - 0.2) < 1e-15
    assert optimality_gap(None, 0) == 1.0
    step = AnytimeTrace([TraceEvent(10.0, 200.0, 0.0, "incumbent"), TraceEvent(20.0, 100.0, 0.0, "incumbent")])
    assert primal_integral(step, 100.0, 30.0) == 15.0
    # Synthetic batch: optimality gaps 0.1 .. 1.0, primal gaps 0 except the unsolved run.
    records = []
    for k in range(1, 11):
        primal = None if k == 10 else 100.0
        events = [] if primal is None else [TraceEvent(2.0, primal, 0.0, "incumbent")]
        events.append(TraceEvent(2.0, primal, 0.0 if primal is None else 100.0 - 10 * k, "final"))
        records.append(RunRecord(f"r{k}", 20, "angle", "cabs", AnytimeTrace(events), 10.0))
    (row,) = aggregate_report(records, {f"r{k}": 100.0 for k in range(1, 11)})
    assert row.count == 10
    assert row.mean_opt_gap == (0.1 + 0.2 + 0.3 + 0.4 + 0.5 + 0.6 + 0.7 + 0.8 + 0.9 + 1.0) / 10
    assert row.mean_opt_gap == 0.55
    assert row.mean_primal_gap == 0.1
    assert row.mean_primal_integral == (9 * 2.0 + 10.0) / 10


def _pipeline(root, monkeypatch):
    monkeypatch.setenv("QTSP_OUT_DIR", str(root))
    main(["generate", "--n", "9", "--seed", "11", "--count", "3", "--kind", "angledistance"])
    for p in sorted(root.glob("*.qtsp")):
        for solver in ("exact", "cabs"):
            main(["solve", p.name, "--solver", solver,
                  "--clock", "expansions", "--expansion-limit", "4000"])
    main(["metrics", "."])
    return {f.name: f.read_bytes() for f in sorted(root.iterdir())}


def test_criterion_10_determinism_and_pruning(tmp_path, monkeypatch):
    runs = []
    for name in ("first", "second"):
        d = tmp_path / name
        d.mkdir()
        monkeypatch.chdir(d)
        runs.append(_pipeline(d, monkeypatch))
    assert runs[0] == runs[1]
    assert len(runs[0]) > 3
    mismatched = []
    for key in suite():
        if key[0] > 8:
            continue
        inst = instance(*key)
        a, b = solve_exact(inst), solve_exact(inst, prune=False)
        if a.status != b.status or abs(a.cost - b.cost) > TOL or abs(a.cost - optimum(*key)) > TOL:
            mismatched.append(key)
    assert mismatched == []
    assert np.isfinite(optimum(8, 0, "angle"))
