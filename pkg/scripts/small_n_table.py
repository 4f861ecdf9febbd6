"""Gap and time against the exhaustive optimum on small random instances.

    python3 scripts/small_n_table.py --sizes 10 15 20 --instances 10 --seeds 10
"""
import argparse
import time

import numpy as np

from vpsdp import SolverConfig, brute_force, gap_pct, gen_random, solve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 15, 20])
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    print("n,algo,runs,mean_gap_pct,exact_frac,mean_time_s,max_time_s")
    for n in args.sizes:
        insts = [gen_random(n, seed=i) for i in range(args.instances)]
        optima = [brute_force(inst)[1] for inst in insts]
        for engine in ("ppa", "pabb"):
            gaps, times = [], []
            for inst, fopt in zip(insts, optima):
                for seed in range(args.seeds):
                    t0 = time.perf_counter()
                    rep = solve(inst, SolverConfig(engine=engine, seed=seed))
                    times.append(time.perf_counter() - t0)
                    gaps.append(gap_pct(rep.objective, fopt) if fopt != 0 else 0.0)
            gaps = np.array(gaps)
            print(f"{n},{engine},{gaps.size},{gaps.mean():.4f},{np.mean(gaps == 0):.2f},"
                  f"{np.mean(times):.4f},{np.max(times):.4f}")


if __name__ == "__main__":
    main()
