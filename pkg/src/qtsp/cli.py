"""Command-line interface: ``qtsp generate | solve | export | check | metrics``.

Exit codes: 0 success, 1 infeasible candidate (``check``), 2 bad arguments or
unreadable input, 3 no solution, 4 time/expansion budget or memory cap hit.
Outputs go to ``--out``/``--out-dir``, defaulting to ``$QTSP_OUT_DIR`` or the
current directory, and are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .didp.search import BACKENDS, Budget, SolveResult, solve_cabs, solve_exact
from .didp.trace import AnytimeTrace, TraceEvent, read_trace, trace_to_csv
from .errors import ParseError, QtspError
from .fileio import atomic_write_text, format_cost, read_instance, write_instance, write_solution
from .instance import KINDS, Instance, Tour, generate_instance, normalize_kind, validate_tour
from .metrics import (
    RunRecord,
    aggregate_report,
    best_known_from_runs,
    report_to_csv,
    report_to_dat,
    run_metrics,
    runs_to_csv,
)

log = logging.getLogger("qtsp")

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_NO_SOLUTION, EXIT_BUDGET = 0, 1, 2, 3, 4
OUT_DIR_ENV = "QTSP_OUT_DIR"
SOLVERS = ("oracle", "exact", "cabs")
EXPORT_FORMATS = ("lp-milp", "lp-miqp", "cp")
ORACLE_BEST_KNOWN_MAX_N = 9


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or math.isinf(v):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _kind(text: str) -> str:
    try:
        return normalize_kind(text)
    except QtspError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _out_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or ".")


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    if args.kind == "explicit":
        raise QtspError("generate supports the angle and angledistance kinds only")
    if args.count > 1 and args.out:
        raise QtspError("--out names a single file; use --out-dir with --count")
    for seed in range(args.seed, args.seed + args.count):
        if seed >= 2**64:
            raise QtspError("seed range exceeds 2^64")
        inst = generate_instance(args.n, seed, args.kind, args.rho)
        path = Path(args.out) if args.out else _out_dir(args) / f"{args.kind}-n{args.n}-s{seed}.qtsp"
        write_instance(inst, path)
        rho = f" rho={args.rho:g}" if args.kind == "angledistance" else ""
        print(f"{path} n={inst.n} kind={inst.kind}{rho} seed={seed}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def _solve_oracle(inst: Instance, budget: Budget) -> SolveResult:
    from .oracle import brute_force_optimal

    start = time.monotonic()
    tour, cost = brute_force_optimal(inst)
    evaluated = math.factorial(inst.n - 1)
    if budget.clock == "expansions":
        elapsed = evaluated * budget.seconds_per_expansion
    else:
        elapsed = time.monotonic() - start
    trace = AnytimeTrace([TraceEvent(elapsed, cost, 0.0, "incumbent"),
                          TraceEvent(elapsed, cost, cost, "final")], "optimal")
    return SolveResult(tour, cost, "optimal", cost, trace, evaluated, elapsed, "oracle", "python")


def _run_solver(inst: Instance, opts: dict) -> SolveResult:
    budget = Budget(opts["time_limit"], opts["expansion_limit"], opts["node_cap"], opts["clock"])
    if opts["solver"] == "oracle":
        return _solve_oracle(inst, budget)
    if opts["solver"] == "exact":
        return solve_exact(inst, budget, prune=opts["prune"], backend=opts["backend"])
    return solve_cabs(inst, budget, width=opts["width"], growth=opts["growth"], backend=opts["backend"])


def _exit_code(res: SolveResult) -> int:
    if res.status in ("optimal", "feasible"):
        return EXIT_OK
    if res.status == "no-solution" and not res.budget_exhausted:
        return EXIT_NO_SOLUTION
    return EXIT_BUDGET


def _fmt_opt(v) -> str:
    return "none" if v is None else format_cost(v)


def _solve_one(path: str, opts: dict) -> tuple[str, int, str]:
    """Solve one instance file; returns ``(summary line, exit code, error text)``."""
    try:
        inst = read_instance(path)
        res = _run_solver(inst, opts)
    except (QtspError, OSError) as exc:
        return "", EXIT_USAGE, f"{path}: {exc}"
    stem = Path(path).stem
    out_dir = Path(opts["out_dir"])
    sol_path = Path(opts["solution"]) if opts["solution"] else out_dir / f"{stem}.{opts['solver']}.sol"
    trace_path = Path(opts["trace"]) if opts["trace"] else out_dir / f"{stem}.{opts['solver']}.trace.csv"
    res.trace.meta.update({
        "instance": stem,
        "instance_path": str(path),
        "n": str(inst.n),
        "kind": inst.kind,
        "solver": opts["solver"],
        "backend": res.backend,
        "clock": opts["clock"],
        "time_limit": "none" if opts["time_limit"] is None else repr(opts["time_limit"]),
        "memory": "memory-out" if res.memory_out else "ok",
        "expansions": str(res.expansions),
    })
    try:
        if res.tour is not None:
            write_solution(res.tour, res.cost, sol_path)
        atomic_write_text(trace_path, trace_to_csv(res.trace))
    except OSError as exc:
        return "", EXIT_USAGE, f"cannot write output: {exc}"
    line = f"{res.status} {_fmt_opt(res.cost)} {format_cost(res.dual)} {res.elapsed:.6f} {res.expansions}"
    return line, _exit_code(res), ""


def cmd_solve(args) -> int:
    opts = {
        "solver": args.solver,
        "time_limit": args.time_limit,
        "expansion_limit": args.expansion_limit,
        "node_cap": args.node_cap,
        "clock": args.clock,
        "width": args.width,
        "growth": args.growth,
        "prune": not args.no_prune,
        "backend": args.backend,
        "out_dir": str(_out_dir(args)),
        "solution": args.solution,
        "trace": args.trace,
    }
    if len(args.instances) > 1 and (args.solution or args.trace):
        raise QtspError("--solution/--trace name single files; use --out-dir for batches")
    batch = len(args.instances) > 1
    if args.jobs > 1 and batch:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_solve_one, args.instances, [opts] * len(args.instances)))
    else:
        results = [_solve_one(p, opts) for p in args.instances]
    code = EXIT_OK
    for path, (line, rc, err) in zip(args.instances, results):
        if err:
            print(f"error: {err}", file=sys.stderr)
        else:
            print(f"{path} {line}" if batch else line)
        code = max(code, rc)
    return code


# ---------------------------------------------------------------------------
# export


def cmd_export(args) -> int:
    from .models import export_cp, export_milp, export_miqp

    inst = read_instance(args.instance)
    fmt = "cp" if args.format == "cp-text" else args.format
    if fmt == "lp-milp":
        model = export_milp(inst, args.subtour)
    elif fmt == "lp-miqp":
        model = export_miqp(inst)
    else:
        model = export_cp(inst)
    tag = {"lp-milp": f".milp-{args.subtour}", "lp-miqp": ".miqp", "cp": ""}[fmt]
    out = Path(args.out) if args.out else _out_dir(args) / f"{Path(args.instance).stem}{tag}{model.suffix}"
    manifest = Path(args.manifest) if args.manifest else out.with_name(out.stem + ".vars.tsv")
    model.write(out, manifest)
    counts = " ".join(f"{k}={v}" for k, v in model.counts().items())
    print(f"{out} {model.format} vars={len(model.manifest)} {counts}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def _read_candidate(path: str):
    """A tour (solution file or bare order line) or a MILP assignment."""
    from .fileio import parse_solution
    from .models import parse_assignment

    text = Path(path).read_text(encoding="utf-8")
    first = text.split(None, 1)[0] if text.split() else ""
    if first == "assignment":
        return "assignment", parse_assignment(text, path)
    if first == "tour":
        return "tour", parse_solution(text, path).order
    try:
        return "tour", tuple(int(t) for t in text.split())
    except ValueError:
        raise ParseError("expected a solution, an order line or an assignment", 1, path) from None


def _successor_walk(a) -> list[int]:
    seq, node = [0], 0
    for _ in range(a.n - 1):
        nxt = [j for j in range(a.n) if j != node and a.x[node, j]]
        if not nxt:
            break
        node = nxt[0]
        seq.append(node)
    return seq


def cmd_check(args) -> int:
    from .models import assignment_from_tour, check_milp, check_miqp, eval_cp

    inst = read_instance(args.instance)
    kind, cand = _read_candidate(args.candidate)
    if kind == "tour":
        problems = validate_tour(inst, cand)
        if problems:
            print("infeasible")
            for p in problems:
                print(f"  tour: {p}")
            return EXIT_INFEASIBLE
        if args.model == "cp":
            report = eval_cp(inst, cand)
        else:
            a = assignment_from_tour(inst, Tour(cand))
            report = check_milp(inst, a) if args.model == "milp" else check_miqp(inst, a)
    else:
        if cand.n != inst.n:
            raise QtspError(f"assignment is for n={cand.n}, instance has n={inst.n}")
        if args.model == "cp":
            report = eval_cp(inst, _successor_walk(cand))
        elif args.model == "milp":
            report = check_milp(inst, cand)
        else:
            report = check_miqp(inst, cand)
    print("feasible" if report.feasible else "infeasible")
    print(f"objective {_fmt_opt(report.objective)}")
    for v in report.violations:
        print(f"  {v}")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# metrics


def _trace_files(paths: list[str]) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.csv")))
        elif p.exists():
            files.append(p)
        else:
            log.warning("trace file %s not found; skipped", p)
    return files


def _read_best_known(path: str) -> dict[str, float]:
    text = Path(path).read_text(encoding="utf-8")
    out = {}
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or row[0].startswith("#") or (lineno == 1 and row[0] == "instance"):
            continue
        if len(row) != 2:
            raise ParseError("expected 'instance,cost'", lineno, path)
        try:
            out[row[0]] = float(row[1])
        except ValueError:
            raise ParseError(f"bad cost {row[1]!r}", lineno, path) from None
    return out


def _oracle_best_known(records: list[RunRecord], instances_dir: str | None) -> dict[str, float]:
    from .oracle import brute_force_optimal

    exact = {}
    for r in records:
        if r.n > ORACLE_BEST_KNOWN_MAX_N or r.instance in exact:
            continue
        candidates = []
        if instances_dir:
            candidates += sorted(Path(instances_dir).glob(f"{r.instance}.*"))
        if r.trace.meta.get("instance_path"):
            candidates.append(Path(r.trace.meta["instance_path"]))
        for c in candidates:
            if c.is_file():
                try:
                    exact[r.instance] = brute_force_optimal(read_instance(c))[1]
                    break
                except (QtspError, OSError) as exc:
                    log.warning("cannot compute exact optimum for %s: %s", r.instance, exc)
    return exact


def cmd_metrics(args) -> int:
    records = []
    for f in _trace_files(args.traces):
        try:
            trace = read_trace(f)
            records.append(RunRecord.from_trace(trace, time_limit=args.horizon))
        except (QtspError, OSError) as exc:
            log.warning("%s: %s; skipped", f, exc)
    exact = _oracle_best_known(records, args.instances)
    if args.best_known:
        exact.update(_read_best_known(args.best_known))
    best = best_known_from_runs(records, exact)
    rows = aggregate_report(records, best)
    out_dir = _out_dir(args)
    report_path = Path(args.out) if args.out else out_dir / "report.csv"
    runs_path = Path(args.runs_out) if args.runs_out else out_dir / "runs.csv"
    atomic_write_text(report_path, report_to_csv(rows))
    atomic_write_text(runs_path, runs_to_csv([run_metrics(r, best) for r in records]))
    if args.dat:
        atomic_write_text(Path(args.dat), report_to_dat(rows, args.dat_metric))
    if args.best_known_out:
        body = "instance,cost\n" + "".join(f"{k},{format_cost(v)}\n" for k, v in sorted(best.items()))
        atomic_write_text(Path(args.best_known_out), body)
    sys.stdout.write(report_to_csv(rows))
    for r in rows:
        if r.flagged:
            log.warning("n=%d %s %s: no best-known value for %s", r.n, r.kind, r.solver, ", ".join(r.flagged))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qtsp", description="Quadratic TSP benchmark generator, solvers and model exporter.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("generate", help="generate random instances")
    g.add_argument("--n", type=_positive_int, required=True, help="number of customers (>= 3)")
    g.add_argument("--seed", type=_seed, default=0, help="PRNG seed (default 0)")
    g.add_argument("--kind", type=_kind, default="angle", help=f"cost kind: {', '.join(KINDS[:2])}")
    g.add_argument("--rho", type=_positive_float, default=40.0, help="distance weight for angledistance (default 40)")
    g.add_argument("--count", type=_positive_int, default=1, help="number of instances, seeds seed..seed+count-1")
    g.add_argument("--out", help="output file (single instance only)")
    g.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve instance files")
    s.add_argument("instances", nargs="+", help="instance files")
    s.add_argument("--solver", choices=SOLVERS, default="cabs", help="solver (default cabs)")
    s.add_argument("--time-limit", type=_positive_float, help="time limit in seconds")
    s.add_argument("--expansion-limit", type=_positive_int, help="maximum node expansions")
    s.add_argument("--node-cap", type=_positive_int, help="maximum live nodes (memory cap)")
    s.add_argument("--clock", choices=("wall", "expansions"), default="wall",
                   help="wall time, or virtual time of 1 microsecond per expansion for reproducible traces")
    s.add_argument("--width", type=_positive_int, default=1, help="initial CABS beam width (default 1)")
    s.add_argument("--growth", type=_positive_float, default=2.0, help="CABS width growth factor (default 2)")
    s.add_argument("--no-prune", action="store_true", help="exact solver: disable bound pruning")
    s.add_argument("--backend", choices=BACKENDS, default="auto", help="search kernel backend")
    s.add_argument("--solution", help="solution output file (single instance)")
    s.add_argument("--trace", help="trace CSV output file (single instance)")
    s.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    s.add_argument("--jobs", type=_positive_int, default=1, help="solve this many instances in parallel")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("export", help="write the MILP, MIQP or CP model of an instance")
    e.add_argument("instance")
    e.add_argument("--format", choices=EXPORT_FORMATS + ("cp-text",), default="lp-milp", help="model format")
    e.add_argument("--subtour", choices=("dl", "mtz", "flow"), default="dl", help="MILP subtour elimination")
    e.add_argument("--out", help="model output file")
    e.add_argument("--manifest", help="variable manifest output (default <out stem>.vars.tsv)")
    e.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    e.set_defaults(func=cmd_export)

    c = sub.add_parser("check", help="check a tour or assignment against a model")
    c.add_argument("instance")
    c.add_argument("candidate", help="solution file, order line, or assignment file")
    c.add_argument("--model", choices=("milp", "miqp", "cp"), default="milp")
    c.set_defaults(func=cmd_check)

    m = sub.add_parser("metrics", help="aggregate gaps and primal integrals from traces")
    m.add_argument("traces", nargs="+", help="trace CSV files or directories")
    m.add_argument("--best-known", help="CSV of instance,cost overriding computed best-known values")
    m.add_argument("--instances", help="directory of instance files (exact optimum for n <= 9)")
    m.add_argument("--horizon", type=_positive_float, help="integration horizon (default: each run's time limit)")
    m.add_argument("--out", help="aggregate CSV (default report.csv)")
    m.add_argument("--runs-out", help="per-run CSV (default runs.csv)")
    m.add_argument("--dat", help="also write gnuplot data")
    m.add_argument("--dat-metric", choices=("mean_opt_gap", "mean_primal_gap", "mean_primal_integral"),
                   default="mean_opt_gap")
    m.add_argument("--best-known-out", help="write the best-known table used")
    m.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (QtspError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
