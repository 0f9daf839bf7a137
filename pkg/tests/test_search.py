import os
import subprocess
import sys

import numpy as np
import pytest

from qtsp.didp import AnytimeTrace, Budget, available_backends, solve_cabs, solve_exact
from qtsp.didp.trace import TraceEvent, parse_trace_csv, trace_to_csv
from qtsp.errors import InvalidArgumentError
from qtsp.instance import Instance, generate_instance, tour_cost
from qtsp.oracle import brute_force_optimal

BACKENDS = available_backends()


@pytest.mark.parametrize("backend", BACKENDS)
def test_constant_instances(backend):
    inst = Instance.constant(5, 1.0)
    r = solve_exact(inst, backend=backend)
    assert r.status == "optimal" and r.cost == 5.0
    r = solve_cabs(inst, width=1, backend=backend)
    assert r.status == "optimal" and r.cost == 5.0 and r.passes == 1


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_tensor(backend):
    inst = Instance.from_costs(np.zeros((6, 6, 6)))
    r = solve_exact(inst, backend=backend)
    assert r.status == "optimal" and r.cost == 0.0
    # The first leaf meets the zero bound, so search stops immediately.
    assert r.expansions <= 6


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("kind", ["angle", "angledistance"])
def test_oracle_agreement(backend, kind):
    for n in (5, 6, 7):
        inst = generate_instance(n, 21, kind)
        _, best = brute_force_optimal(inst)
        for r in (solve_exact(inst, backend=backend), solve_cabs(inst, backend=backend),
                  solve_exact(inst, prune=False, backend=backend)):
            assert r.status == "optimal"
            assert abs(r.cost - best) <= 1e-9
            assert tour_cost(inst, r.tour) == r.cost
            assert r.trace.check() == []


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
@pytest.mark.parametrize("kind", ["angle", "angledistance"])
def test_backends_identical(kind):
    inst = generate_instance(9, 4, kind)
    budget = Budget(clock="expansions")
    for solve in (solve_exact, solve_cabs):
        a = solve(inst, budget, backend="cython")
        b = solve(inst, budget, backend="python")
        assert a.tour == b.tour and a.cost == b.cost
        assert a.expansions == b.expansions
        assert a.trace.events == b.trace.events


def test_forced_pure_python_import():
    env = dict(os.environ, QTSP_PURE_PYTHON="1")
    code = "from qtsp.didp import available_backends as a; print(a())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "['python']"


def test_width_monotone_and_final():
    inst = generate_instance(10, 1)
    r = solve_cabs(inst)
    assert r.status == "optimal"
    vals = [v for v in r.pass_incumbents if v is not None]
    assert vals == sorted(vals, reverse=True)
    assert vals[-1] == r.cost


def test_first_pass_finds_tour():
    r = solve_cabs(generate_instance(30, 2), max_passes=1)
    assert r.tour is not None and r.status == "feasible" and r.passes == 1
    assert r.trace.incumbents()


def test_expansion_limit_interrupts():
    inst = generate_instance(12, 3)
    r = solve_exact(inst, Budget(expansion_limit=50))
    assert r.status in ("out-of-budget", "no-solution") and r.budget_exhausted
    r = solve_cabs(inst, Budget(expansion_limit=2000))
    assert r.status == "feasible" and r.budget_exhausted
    assert r.trace.check() == []


def test_interrupted_before_any_leaf():
    r = solve_cabs(generate_instance(40, 1), Budget(expansion_limit=1))
    assert r.status == "no-solution" and r.tour is None and r.budget_exhausted
    assert r.trace.check() == []


def test_node_cap_memory_out():
    r = solve_exact(generate_instance(10, 2), Budget(node_cap=100))
    assert r.memory_out and r.status == "out-of-budget"
    r = solve_cabs(generate_instance(10, 2), Budget(node_cap=50))
    assert r.memory_out and r.status == "out-of-budget"


def test_virtual_clock_is_reproducible():
    inst = generate_instance(9, 5, "angledistance")
    budget = Budget(clock="expansions")
    a = trace_to_csv(solve_cabs(inst, budget).trace)
    b = trace_to_csv(solve_cabs(inst, budget).trace)
    assert a == b


def test_time_limit_in_virtual_seconds():
    inst = generate_instance(14, 5)
    r = solve_cabs(inst, Budget(time_limit=0.002, clock="expansions"))
    assert r.status in ("feasible", "optimal")
    assert r.elapsed <= 0.002 + 256e-6


def test_bad_parameters():
    inst = generate_instance(5, 1)
    with pytest.raises(InvalidArgumentError):
        solve_cabs(inst, width=0)
    with pytest.raises(InvalidArgumentError):
        solve_cabs(inst, growth=1.0)
    with pytest.raises(InvalidArgumentError):
        solve_exact(inst, backend="gpu")
    with pytest.raises(InvalidArgumentError):
        Budget(clock="cpu")


def test_trace_csv_round_trip():
    trace = AnytimeTrace([TraceEvent(0.0, None, 1.0, "bound"), TraceEvent(0.5, 10.0, 2.0, "incumbent"),
                          TraceEvent(1.0, 10.0, 10.0, "final")], "optimal", {"n": "5"})
    back = parse_trace_csv(trace_to_csv(trace))
    assert back.events == trace.events and back.status == "optimal" and back.meta == {"n": "5"}
    assert back.check() == []


def test_trace_check_flags_violations():
    bad = AnytimeTrace([TraceEvent(0.0, 5.0, 1.0, "incumbent"), TraceEvent(1.0, 6.0, 0.5, "bound")], "optimal")
    problems = bad.check()
    assert any("primal increased" in p for p in problems)
    assert any("dual decreased" in p for p in problems)
    assert any("optimal" in p for p in problems)
