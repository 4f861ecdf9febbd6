"""Command-line entry point: ``vpsdp {solve,bench,oracle,gen}``.

Exit codes: 0 converged / success, 2 bad input or flags, 3 solve stopped at
the outer-iteration cap, 4 oracle size refusal.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from .core import SolverConfig
from .driver import InitializationError, solve
from .instances import FORMATS, ParseError, gen_random, load, serialize_sparse
from .oracle import OracleSizeError, native_optimum

EXIT_OK, EXIT_INPUT, EXIT_MAX_OUTER, EXIT_ORACLE_SIZE = 0, 2, 3, 4
STATUS_EXIT = {"converged": EXIT_OK, "max_outer_reached": EXIT_MAX_OUTER}

TRACE_HEADER = ["outer", "inner_iters", "residual", "infeasible_count", "alpha",
                "h_value", "f_rounded"]
BENCH_HEADER = ["instance", "n", "algo", "seed", "time_s", "obj", "lb", "gap_pct",
                "outer_iters", "status"]
AGG_HEADER = ["instance", "algo", "runs", "mean_time_s", "mean_gap_pct"]

log = logging.getLogger("vpsdp")


def fmt_num(v) -> str:
    if v is None:
        return "n/a"
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    p.add_argument("--eta", type=float, default=d.eta)
    p.add_argument("--epsilon", type=float, default=d.epsilon)
    p.add_argument("--sigma", type=float, default=None,
                   help="perturbation std-dev (default 1e-4*max|Q_ij|, integer data only)")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--inner-tol", type=float, default=d.inner_tol)
    p.add_argument("--outer-tol", type=float, default=d.outer_tol)
    p.add_argument("--max-inner", type=int, default=d.max_inner)
    p.add_argument("--max-outer", type=int, default=d.max_outer)


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--format", default="sparse-min", choices=FORMATS)
    p.add_argument("--problem", type=int, default=1,
                   help="problem index inside an orlib-max bundle (1-based)")
    p.add_argument("--diag-to-linear", action="store_true",
                   help="move Q_ii into b (exact on binaries only)")


def _config(args, engine: str, seed: Optional[int] = None) -> SolverConfig:
    return SolverConfig(
        engine=engine, eta=args.eta, epsilon=args.epsilon, sigma=args.sigma,
        seed=args.seed if seed is None else seed, inner_tol=args.inner_tol,
        outer_tol=args.outer_tol, max_inner=args.max_inner, max_outer=args.max_outer,
    )


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for t in trace:
            w.writerow([t.s, t.inner_iters, repr(t.residual), t.infeasible_count,
                        repr(t.alpha_s), repr(t.h_value), fmt_num(t.f_rounded)])


def cmd_solve(args) -> int:
    inst = load(args.input, args.format, args.problem, args.diag_to_linear)
    report = solve(inst, _config(args, args.algo), lb=args.lb)
    if args.trace:
        write_trace(args.trace, report.trace)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        sense = "maximize" if inst.native_sense == "max" else "minimize"
        print(f"instance     {inst.name} (n={inst.n}, {sense})")
        print(f"algorithm    {args.algo}")
        print(f"objective    {fmt_num(report.objective)}")
        print(f"gap_pct      {fmt_num(report.gap_pct)}")
        print(f"outer_iters  {report.outer_iters}")
        print(f"inner_iters  {report.total_inner_iters}")
        print(f"wall_time_s  {report.wall_time:.4f}")
        print(f"status       {report.status}")
        print(f"x            {''.join(map(str, report.x_binary))}")
    return STATUS_EXIT[report.status]


def read_manifest(path) -> List[dict]:
    """Rows ``file,format,lb[,label]``; ``file@k`` picks problem ``k`` of an
    OR-Library bundle. Relative paths resolve against the manifest's folder."""
    path = Path(path)
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [c.strip() for c in line.split(",")]
        if len(parts) not in (3, 4):
            raise ParseError(f"{path}:{lineno}: expected 'file,format,lb[,label]'")
        fname, fmt, lb = parts[:3]
        if fmt not in FORMATS:
            raise ParseError(f"{path}:{lineno}: unknown format {fmt!r}")
        problem = 1
        if "@" in fname:
            fname, k = fname.rsplit("@", 1)
            problem = int(k)
        label = parts[3] if len(parts) == 4 and parts[3] else Path(fname).stem
        rows.append(dict(file=str((path.parent / fname)), format=fmt, problem=problem,
                         lb=float(lb) if lb else None, label=label))
    return rows


def _bench_task(task) -> list:
    row, config = task
    try:
        inst = load(row["file"], row["format"], row["problem"])
    except (OSError, ParseError, ValueError) as exc:
        log.warning("%s: %s", row["file"], exc)
        return [row["label"], "", config.engine, config.seed, "", "",
                fmt_num(row["lb"]) if row["lb"] is not None else "", "", "", "load_error"]
    rep = solve(inst, config, lb=row["lb"])
    return [row["label"], inst.n, config.engine, config.seed, f"{rep.wall_time:.4f}",
            fmt_num(rep.objective), fmt_num(row["lb"]) if row["lb"] is not None else "",
            "n/a" if rep.gap_pct is None else repr(rep.gap_pct), rep.outer_iters,
            rep.status]


def bench_threads(flag: Optional[int]) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("VPSDP_THREADS")
    return max(1, int(env)) if env else 1


def cmd_bench(args) -> int:
    rows = read_manifest(args.manifest)
    algos = [a for item in args.algo for a in item.split(",") if a]
    for a in algos:
        if a not in ("ppa", "pabb"):
            raise ParseError(f"unknown algorithm {a!r}")
    tasks = [(row, _config(args, algo, args.seed + r))
             for row in rows for algo in algos for r in range(args.repeats)]
    workers = bench_threads(args.threads)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_task, tasks))
    else:
        results = [_bench_task(t) for t in tasks]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    w.writerows(results)
    if results:
        agg = defaultdict(list)
        for r in results:
            if r[-1] != "load_error":
                agg[(r[0], r[2])].append(r)
        buf.write("\n# aggregate\n")
        w.writerow(AGG_HEADER)
        for (label, algo), rs in agg.items():
            t = np.mean([float(r[4]) for r in rs])
            gaps = [float(r[7]) for r in rs if r[7] != "n/a"]
            w.writerow([label, algo, len(rs), f"{t:.4f}",
                        repr(float(np.mean(gaps))) if gaps else "n/a"])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load(args.input, args.format, args.problem, args.diag_to_linear)
    x, f = native_optimum(inst, args.limit)
    print(f"f_opt {fmt_num(f)}")
    print(f"x_opt {''.join(map(str, x))}")
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.n < 1:
        raise ParseError("--n must be >= 1")
    if not 0 < args.density <= 1:
        raise ParseError("--density must lie in (0, 1]")
    for name in ("diag_range", "offdiag_range"):
        lo, hi = getattr(args, name)
        if lo > hi:
            raise ParseError(f"--{name.replace('_', '-')}: low end exceeds high end")
    inst = gen_random(args.n, args.seed, args.diag_range, args.offdiag_range,
                      args.density)
    text = serialize_sparse(inst)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpsdp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    _add_input_flags(p)
    p.add_argument("--algo", default="pabb", choices=("ppa", "pabb"))
    _add_solver_flags(p)
    p.add_argument("--lb", type=float, default=None,
                   help="reference value in the file's native sense")
    p.add_argument("--trace", type=Path, default=None, help="per-outer-iteration CSV")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a manifest of instances")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--algo", nargs="+", default=["ppa", "pabb"])
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="parallel workers (default: $VPSDP_THREADS or 1)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="exhaustive optimum for small n")
    _add_input_flags(p)
    p.add_argument("--limit", type=int, default=26)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="write a random integer instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--diag-range", type=int, nargs=2, default=(-100, 100),
                   metavar=("LO", "HI"))
    p.add_argument("--offdiag-range", type=int, nargs=2, default=(-50, 50),
                   metavar=("LO", "HI"))
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OracleSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_SIZE
    except (ParseError, OSError, InitializationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
