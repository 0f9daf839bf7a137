import math

import pytest

from qtsp.didp.trace import AnytimeTrace, TraceEvent
from qtsp.errors import InconsistentDataError, InvalidArgumentError
from qtsp.metrics import (
    RunRecord,
    aggregate_report,
    best_known_from_runs,
    optimality_gap,
    primal_gap,
    primal_integral,
    report_to_csv,
    report_to_dat,
)


def _trace(*incumbents, final_dual=0.0, status="feasible"):
    events = [TraceEvent(t, p, 0.0, "incumbent") for t, p in incumbents]
    last_t = incumbents[-1][0] if incumbents else 0.0
    last_p = incumbents[-1][1] if incumbents else None
    events.append(TraceEvent(last_t, last_p, final_dual, "final"))
    return AnytimeTrace(events, status)


def test_optimality_gap_examples():
    assert optimality_gap(100, 80) == pytest.approx(0.2, abs=1e-15)
    assert optimality_gap(None, 0) == 1.0
    assert optimality_gap(50, 50) == 0.0
    assert optimality_gap(0, 0) == 0.0


def test_optimality_gap_errors():
    with pytest.raises(InvalidArgumentError):
        optimality_gap(10, -1)
    with pytest.raises(InconsistentDataError):
        optimality_gap(10, 11)


def test_primal_gap_examples():
    assert primal_gap(125, 100) == 0.2
    assert primal_gap(100, 100) == 0.0
    assert primal_gap(None, 100) == 1.0
    with pytest.raises(InconsistentDataError):
        primal_gap(90, 100)


def test_primal_integral_step():
    # Gap 1 until 10 s, 0.5 until 20 s, 0 afterwards.
    trace = _trace((10.0, 200.0), (20.0, 100.0))
    assert primal_integral(trace, 100.0, 30.0) == 15.0


def test_primal_integral_edges():
    assert primal_integral(AnytimeTrace(), 100.0, 30.0) == 30.0
    assert primal_integral(_trace((0.0, 100.0)), 100.0, 30.0) == 0.0
    assert primal_integral(_trace((4.0, 100.0)), 100.0, 30.0) == 4.0
    # Incumbents after the horizon do not count.
    assert primal_integral(_trace((40.0, 100.0)), 100.0, 30.0) == 30.0
    with pytest.raises(InvalidArgumentError):
        primal_integral(AnytimeTrace(), 100.0, 0.0)
    unsorted = AnytimeTrace([TraceEvent(2.0, 5.0, 0.0, "incumbent"), TraceEvent(1.0, 4.0, 0.0, "incumbent")])
    with pytest.raises(InvalidArgumentError):
        primal_integral(unsorted, 4.0, 10.0)


def test_primal_integral_improves_with_earlier_incumbent():
    base = _trace((10.0, 150.0), (20.0, 100.0))
    better = _trace((5.0, 150.0), (20.0, 100.0))
    assert primal_integral(better, 100.0, 30.0) <= primal_integral(base, 100.0, 30.0)


def _rec(inst, n, kind, solver, primal, dual, limit=10.0):
    return RunRecord(inst, n, kind, solver, _trace((1.0, primal), final_dual=dual) if primal is not None
                     else AnytimeTrace([TraceEvent(0.0, None, dual, "final")]), limit)


def test_aggregate_hand_computed():
    # Ten runs with optimality gaps 0.1 .. 1.0.
    recs = []
    for k in range(1, 10):
        recs.append(_rec(f"i{k}", 10, "angle", "cabs", 100.0, 100.0 - 10 * k))
    recs.append(_rec("i10", 10, "angle", "cabs", None, 0.0))
    best = {f"i{k}": 100.0 for k in range(1, 10)}
    best["i10"] = 100.0
    (row,) = aggregate_report(recs, best)
    assert row.count == 10
    assert row.mean_opt_gap == pytest.approx(0.55, abs=1e-15)
    assert row.mean_primal_gap == pytest.approx(0.1, abs=1e-15)
    # Nine runs: gap 1 for 1 s then 0; one run: gap 1 for all 10 s.
    assert row.mean_primal_integral == pytest.approx((9 * 1.0 + 10.0) / 10, abs=1e-15)


def test_single_record_and_grouping():
    recs = [_rec("a", 5, "angle", "cabs", 10.0, 8.0), _rec("b", 5, "angledistance", "cabs", 10.0, 10.0)]
    rows = aggregate_report(recs, {"a": 10.0, "b": 10.0})
    assert [(r.kind, r.mean_opt_gap) for r in rows] == [("angle", pytest.approx(0.2)), ("angledistance", 0.0)]


def test_missing_best_known_flagged():
    recs = [_rec("a", 5, "angle", "cabs", 10.0, 8.0), _rec("b", 5, "angle", "cabs", 20.0, 10.0)]
    (row,) = aggregate_report(recs, {"a": 10.0})
    assert row.flagged == ["b"] and row.count == 2
    assert row.mean_primal_gap == 0.0
    assert row.mean_opt_gap == pytest.approx(0.35)


def test_best_known_prefers_exact():
    recs = [_rec("a", 5, "angle", "cabs", 12.0, 8.0), _rec("a", 5, "angle", "exact", 11.0, 11.0),
            _rec("b", 30, "angle", "cabs", None, 0.0)]
    assert best_known_from_runs(recs) == {"a": 11.0}
    assert best_known_from_runs(recs, {"a": 10.0}) == {"a": 10.0}


def test_report_outputs():
    rows = aggregate_report([_rec("a", 5, "angle", "cabs", 10.0, 10.0)], {"a": 10.0})
    csv = report_to_csv(rows)
    assert csv.splitlines() == ["n,kind,solver,mean_opt_gap,mean_primal_gap,mean_primal_integral,count",
                                "5,angle,cabs,0.0,0.0,1.0,1"]
    dat = report_to_dat(rows)
    assert dat.splitlines()[-1] == "5 0.0"


def test_record_validation():
    with pytest.raises(InvalidArgumentError):
        RunRecord("a", 5, "angle", "cabs", AnytimeTrace(), 10.0, "oom")
    with pytest.raises(InvalidArgumentError):
        RunRecord("a", 5, "angle", "cabs", AnytimeTrace(), 0.0)
    assert math.isnan(aggregate_report([_rec("a", 5, "angle", "cabs", 1.0, 1.0)], {})[0].mean_primal_gap)
