"""Regenerate the bundled fixtures in data/ and their manifest of optima.

Every optimum in data/manifest.csv comes from the exhaustive oracle.
    python scripts/make_fixtures.py
"""
from pathlib import Path

import numpy as np

from vpsdp.cli import fmt_num
from vpsdp.instances import gen_random, load, serialize_sparse
from vpsdp.oracle import native_optimum

DATA = Path(__file__).resolve().parent.parent / "data"


def gset_style_graph(n, m, seed):
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    pick = rng.choice(len(pairs), size=m, replace=False)
    lines = [f"{n} {m}"]
    for k in sorted(pick):
        i, j = pairs[k]
        lines.append(f"{i} {j} {int(rng.choice([-1, 1]))}")
    return "\n".join(lines) + "\n"


def orlib_bundle(sizes, seed):
    rng = np.random.default_rng(seed)
    out = [str(len(sizes))]
    for n in sizes:
        entries = []
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                if i == j or rng.random() < 0.4:
                    entries.append(f"{i} {j} {int(rng.integers(-100, 101))}")
        out.append(f"{n} {len(entries)}")
        out.extend(entries)
    return "\n".join(out) + "\n"


def main():
    DATA.mkdir(exist_ok=True)
    (DATA / "tiny2.sparse").write_text("2 3\n1 1 -1\n2 2 -1\n1 2 1\n")
    (DATA / "triangle.graph").write_text("3 3\n1 2 1\n2 3 1\n1 3 1\n")
    (DATA / "gset20.graph").write_text(gset_style_graph(20, 60, seed=20))
    (DATA / "rand16.sparse").write_text(serialize_sparse(gen_random(16, seed=7)))
    (DATA / "gka_small.orlib").write_text(orlib_bundle([10, 18], seed=3))

    entries = [("tiny2.sparse", "sparse-min"), ("triangle.graph", "graph-maxcut"),
               ("gset20.graph", "graph-maxcut"), ("rand16.sparse", "sparse-min"),
               ("gka_small.orlib@1", "orlib-max"), ("gka_small.orlib@2", "orlib-max")]
    lines = ["# file,format,lb,label  (lb = exhaustive optimum, native sense)"]
    for fname, fmt in entries:
        path, _, k = fname.partition("@")
        inst = load(DATA / path, fmt, int(k or 1))
        x, f = native_optimum(inst)
        label = path.split(".")[0] + (f"-{k}" if k else "")
        lines.append(f"{fname},{fmt},{fmt_num(f)},{label}")
        print(f"{label:14s} n={inst.n:3d} opt={fmt_num(f):>8s} x={''.join(map(str, x))}")
    (DATA / "manifest.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
