"""Compare the compiled and pure-Python search kernels.

Runs the exact solver and CABS on a few generated instances with each
backend, checks that both return the same tour, cost and expansion count,
and prints wall times and the speed-up.

    python benchmarks/bench_kernels.py [--sizes 7 8 9] [--seeds 1 2] [--repeat 3]
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

from qtsp import generate_instance
from qtsp.didp import Budget, available_backends, solve_cabs, solve_exact

SOLVERS = {
    "exact": lambda inst, backend, budget: solve_exact(inst, budget, backend=backend),
    "cabs": lambda inst, backend, budget: solve_cabs(inst, budget, backend=backend),
}


def _time(fn, repeat):
    times, res = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), res


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[7, 8, 9, 10])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--kinds", nargs="+", default=["angle", "angledistance"])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--expansion-limit", type=int, default=200_000)
    args = ap.parse_args(argv)

    if "cython" not in available_backends():
        print("compiled kernels not available; build with `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1

    print(f"{'solver':6} {'kind':13} {'n':>3} {'seed':>4} {'expans':>8} {'python s':>9} {'cython s':>9} {'speedup':>8}")
    mismatches = 0
    speedups = []
    for solver, run in SOLVERS.items():
        for kind in args.kinds:
            for n in args.sizes:
                for seed in args.seeds:
                    inst = generate_instance(n, seed, kind)
                    budget = Budget(expansion_limit=args.expansion_limit, clock="expansions")
                    tp, rp = _time(lambda: run(inst, "python", budget), args.repeat)
                    tc, rc = _time(lambda: run(inst, "cython", budget), args.repeat)
                    same = (rp.cost == rc.cost and rp.expansions == rc.expansions
                            and (rp.tour.order if rp.tour else None) == (rc.tour.order if rc.tour else None))
                    if not same:
                        mismatches += 1
                    sp = tp / tc if tc > 0 else float("inf")
                    speedups.append(sp)
                    flag = "" if same else "  MISMATCH"
                    print(f"{solver:6} {kind:13} {n:>3} {seed:>4} {rc.expansions:>8} "
                          f"{tp:>9.4f} {tc:>9.4f} {sp:>7.1f}x{flag}")
    print(f"median speed-up {statistics.median(speedups):.1f}x, {mismatches} mismatching runs")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
