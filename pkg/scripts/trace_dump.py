"""Per-outer-iteration traces for both engines on one instance, for
convergence plots (infeasible count, penalty step, rounded objective).

    python3 scripts/trace_dump.py --n 100 --seed 0 --outdir traces/
"""
import argparse
from pathlib import Path

from vpsdp import SolverConfig, gen_random, solve
from vpsdp.cli import write_trace


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", type=Path, default=Path("traces"))
    args = ap.parse_args()

    args.outdir.mkdir(parents=True, exist_ok=True)
    inst = gen_random(args.n, seed=args.seed)
    for engine in ("ppa", "pabb"):
        rep = solve(inst, SolverConfig(engine=engine, seed=args.seed))
        path = args.outdir / f"{inst.name}-{engine}.csv"
        write_trace(path, rep.trace)
        print(f"{engine}: {rep.status}, f={rep.objective:g}, outer={rep.outer_iters}, "
              f"inner={rep.total_inner_iters}, {rep.wall_time:.2f}s -> {path}")


if __name__ == "__main__":
    main()
