"""Exit criteria for the solver, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the pytest terminal
summary under "acceptance criteria".
"""
import csv
import itertools
import time

import numpy as np
import pytest

from vpsdp.cli import main, write_trace
from vpsdp.core import (PenaltyState, QuadraticInstance, SolverConfig, build_hp,
                        binary_distance, eval_f, eval_h, grad_h)
from vpsdp.driver import prepare, solve
from vpsdp.instances import WeightedGraph, gen_random, laplacian, maxcut_to_ubqp
from vpsdp.oracle import brute_force, gap_pct
from vpsdp.subsolvers import kkt_breakdown

from conftest import random_instance, record_criterion

SMALL_SEEDS = range(10)
SMALL_INSTANCES = range(10)


@pytest.fixture(scope="module")
def small_runs():
    runs = []
    for i in SMALL_INSTANCES:
        inst = gen_random(20, seed=i)
        _, fopt = brute_force(inst)
        for engine in ("ppa", "pabb"):
            for seed in SMALL_SEEDS:
                t0 = time.perf_counter()
                rep = solve(inst, SolverConfig(engine=engine, seed=seed))
                runs.append(dict(i=i, engine=engine, seed=seed, report=rep,
                                 gap=gap_pct(rep.objective, fopt),
                                 time=time.perf_counter() - t0))
    return runs


def test_criterion_01_small_n_exactness(small_runs):
    ok = True
    parts = []
    for engine in ("ppa", "pabb"):
        rs = [r for r in small_runs if r["engine"] == engine]
        mean_gap = float(np.mean([r["gap"] for r in rs]))
        exact = np.mean([r["gap"] == 0 for r in rs])
        slowest = max(r["time"] for r in rs)
        ok &= mean_gap <= 1.0 and exact >= 0.70 and slowest < 1.0
        parts.append(f"{engine}: mean gap {mean_gap:.3f}% exact {exact:.0%} "
                     f"max time {slowest:.2f}s")
    assert record_criterion(1, ok, "; ".join(parts))


def test_criterion_02_ppa_descent():
    inst = gen_random(100, seed=2)
    config = SolverConfig(engine="ppa", seed=0)
    work = prepare(inst, config).working
    Qd = work.dense()
    rowabs = np.abs(Qd).sum(axis=1)
    cache = {}
    stats = dict(steps=0, violations=0)

    def check(rec):
        key = id(rec.p)
        if key not in cache:
            ps = PenaltyState.from_p(work, rec.p.copy())
            cache.clear()
            cache[key] = (ps, np.maximum(rowabs - rec.p, config.epsilon))
        ps, hp = cache[key]
        d = rec.x - rec.x_prev
        prox = d @ (hp * d) - d @ Qd @ d + d @ (ps.p * d)
        h0 = eval_h(work, ps, rec.x_prev)
        h1 = eval_h(work, ps, rec.x)
        stats["steps"] += 1
        if h1 > h0 - prox + 1e-8 * (1 + abs(h0)):
            stats["violations"] += 1

    rep = solve(inst, config, on_step=check)
    ok = stats["steps"] > 0 and stats["violations"] == 0
    assert record_criterion(2, ok, f"{stats['violations']} violations in "
                                   f"{stats['steps']} PPA steps (n=100, {rep.status})")


def test_criterion_03_gradient_check():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 30))
        inst = random_instance(n, rng)
        ps = PenaltyState.from_p(inst, rng.uniform(0, 50, n))
        x = rng.random(n)
        g = grad_h(inst, ps, x)
        fd = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1e-6
            fd[i] = (eval_h(inst, ps, x + e) - eval_h(inst, ps, x - e)) / 2e-6
        worst = max(worst, float(np.max(np.abs(fd - g)) / max(1.0, np.max(np.abs(g)))))
    assert record_criterion(3, worst <= 1e-6, f"max relative error {worst:.2e}")


def test_criterion_04_penalty_identities():
    rng = np.random.default_rng(404)
    mono_bad = exact_bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 15))
        inst = random_instance(n, rng, integer=bool(rng.integers(2)))
        p1 = rng.uniform(0, 100, n)
        p2 = p1 + rng.uniform(0, 100, n)
        x = rng.random(n)
        h1 = eval_h(inst, PenaltyState.from_p(inst, p1), x)
        h2 = eval_h(inst, PenaltyState.from_p(inst, p2), x)
        mono_bad += h1 > h2 + 1e-12 * (1 + abs(h2))
        xb = rng.integers(0, 2, n).astype(float)
        exact_bad += eval_h(inst, PenaltyState.from_p(inst, p2), xb) != eval_f(inst, xb)
    ok = mono_bad == 0 and exact_bad == 0
    assert record_criterion(4, ok, f"monotonicity failures {mono_bad}/1000, "
                                   f"binary mismatches {exact_bad}/1000")


def test_criterion_05_proximal_psd():
    rng = np.random.default_rng(505)
    worst = np.inf
    for _ in range(50):
        n = int(rng.integers(1, 201))
        inst = random_instance(n, rng)
        p = rng.uniform(0, 2 * np.abs(inst.Q).sum(axis=1).max(), n)
        ps = PenaltyState.from_p(inst, p)
        M = np.diag(build_hp(inst, ps, 1e-6)) - inst.Q + np.diag(p)
        worst = min(worst, float(np.linalg.eigvalsh(M)[0]))
    assert record_criterion(5, worst >= -1e-8, f"min eigenvalue {worst:.3e}")


OUTER_SIZES = (20, 40, 60, 80, 100)


@pytest.fixture(scope="module")
def outer_runs():
    runs = []
    for n in OUTER_SIZES:
        for i in range(5):
            inst = gen_random(n, seed=10 * n + i)
            config = SolverConfig(engine="pabb", seed=i)
            rep = solve(inst, config, keep_iterates=True)
            runs.append((inst, config, rep))
    return runs


def test_criterion_06_outer_convergence(outer_runs):
    converged = [rep for _, _, rep in outer_runs
                 if rep.status == "converged" and binary_distance(
                     rep.trace[-1].x if rep.trace else rep.x_binary) <= 1e-5]
    tails_ok = all(rep.trace[-1].infeasible_count == 0 for rep in converged if rep.trace)
    ok = len(converged) >= 24 and tails_ok
    max_outer = max(rep.outer_iters for _, _, rep in outer_runs)
    assert record_criterion(6, ok, f"{len(converged)}/25 converged, final infeasible "
                                   f"count zero: {tails_ok}, max outer {max_outer}")


def test_criterion_07_inner_profile(outer_runs):
    inner = [t.inner_iters for _, _, rep in outer_runs for t in rep.trace]
    capped = sum(t.hit_cap for _, _, rep in outer_runs for t in rep.trace)
    frac = capped / len(inner)
    median = float(np.median(inner))
    ok = frac <= 0.01 and median < 1000
    assert record_criterion(7, ok, f"{capped}/{len(inner)} subsolves capped ({frac:.2%}), "
                                   f"median inner {median:.0f}")


def test_criterion_08_maxcut_equivalence():
    rng = np.random.default_rng(808)
    mismatches = 0
    for _ in range(20):
        n = int(rng.integers(2, 13))
        edges = [(i, j, float(rng.integers(-10, 11)))
                 for i in range(1, n + 1) for j in range(i + 1, n + 1) if rng.random() < 0.5]
        g = WeightedGraph(n, edges)
        L = laplacian(g).toarray()
        ys = np.array(list(itertools.product([0, 1], repeat=n)), dtype=float)
        quad = float(np.max(np.einsum("ij,jk,ik->i", ys, L, ys)))
        cut = max(sum(w for a, b, w in edges if y[a - 1] != y[b - 1]) for y in ys)
        inst = maxcut_to_ubqp(g)
        via_oracle = inst.to_native(brute_force(inst)[1])
        mismatches += not (quad == cut == via_oracle)
    assert record_criterion(8, mismatches == 0, f"{mismatches}/20 graphs disagree")


def block_residual(Qbar, bbar, x, tau=1e-6):
    I = np.flatnonzero((x > tau) & (x < 1 - tau))
    K = np.flatnonzero(x >= 1 - tau)
    J = np.flatnonzero(x <= tau)
    part = lambda R: (2 * Qbar[np.ix_(R, I)] @ x[I] + 2 * Qbar[np.ix_(R, K)].sum(axis=1)
                      + bbar[R])
    c1, c2, c3 = part(I), part(J), part(K)
    cret = max([0.0] + list(np.abs(c1)) + list(-np.minimum(c2, 0)) + list(np.maximum(c3, 0)))
    rho = max(1.0, np.max(np.abs(2 * Qbar)), np.max(np.abs(bbar)))
    return cret / rho


def test_criterion_09_kkt_residual(outer_runs):
    inst = QuadraticInstance.create([[-1.0, 0.0], [0.0, -1.0]], [0.0, 1.0])
    constructed = kkt_breakdown(inst, PenaltyState.zero(inst), np.array([1.0, 0.0])).residual
    worst, checked = 0.0, 0
    for orig, config, rep in outer_runs:
        work = prepare(orig, config).working
        Qd = work.dense()
        for t in rep.trace:
            if t.hit_cap:
                continue
            worst = max(worst, block_residual(Qd - np.diag(t.p), work.b + t.p, t.x))
            checked += 1
    ok = constructed == 0 and worst <= 1e-5
    assert record_criterion(9, ok, f"constructed point residual {constructed}; max residual "
                                   f"{worst:.2e} over {checked} converged subsolves")


def test_criterion_10_runtime():
    inst = gen_random(250, seed=250)
    times = {}
    for engine in ("pabb", "ppa"):
        t0 = time.perf_counter()
        rep = solve(inst, SolverConfig(engine=engine, seed=0))
        times[engine] = (time.perf_counter() - t0, rep.status)
    ok = times["pabb"][0] < 10 and times["ppa"][0] < 60
    assert record_criterion(10, ok, f"n=250 pabb {times['pabb'][0]:.2f}s ({times['pabb'][1]}), "
                                    f"ppa {times['ppa'][0]:.2f}s ({times['ppa'][1]})")


def test_criterion_11_harness_accepts_benchmark_formats(tmp_path, data_dir):
    # the published benchmark tables need external archives; only the
    # harness path for those formats is exercised here
    out = tmp_path / "bench.csv"
    code = main(["bench", "--manifest", str(data_dir / "manifest.csv"), "--repeats", "1",
                 "--algo", "pabb", "--out", str(out)])
    rows = list(csv.reader(out.read_text().split("\n\n")[0].splitlines()))[1:]
    formats_ok = code == 0 and len(rows) == 6 and all(r[-1] == "converged" for r in rows)
    assert record_criterion(11, formats_ok, "published archive tables not reproduced; "
                                            "harness ran sparse/orlib/graph manifest rows")


def test_criterion_12_determinism(small_runs, tmp_path):
    same = True
    for r in small_runs[:: len(small_runs) // 8]:
        inst = gen_random(20, seed=r["i"])
        again = solve(inst, SolverConfig(engine=r["engine"], seed=r["seed"]))
        first = r["report"]
        write_trace(tmp_path / "a.csv", first.trace)
        write_trace(tmp_path / "b.csv", again.trace)
        same &= np.array_equal(first.x_binary, again.x_binary)
        same &= (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert record_criterion(12, same, "repeated runs: identical x_binary and trace CSV bytes")
