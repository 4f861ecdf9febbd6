"""Benchmark file formats, random instances, and the max-cut reduction.

sparse-min
    ``n m`` header, then ``m`` lines ``i j v`` (1-indexed). ``i j v`` with
    ``i != j`` sets ``Q_ij = Q_ji = v``; ``i i v`` sets ``Q_ii``. Comment
    lines may carry directives: ``# sense max``, ``# name LABEL`` and
    ``# b i v`` (linear coefficient).
orlib-max
    Problem count ``P``, then per problem ``n nnz`` and ``nnz`` triplets in
    the sparse-min convention. Objective is maximized.
graph-maxcut
    ``n m`` header, then ``m`` edge lines ``i j w``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .core import QuadraticInstance

log = logging.getLogger(__name__)

FORMATS = ("sparse-min", "orlib-max", "graph-maxcut")


class ParseError(ValueError):
    pass


@dataclass
class WeightedGraph:
    n: int
    edges: List[Tuple[int, int, float]]
    duplicates: int = 0

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            W[i - 1, j - 1] += w
            W[j - 1, i - 1] += w
        return W

    def cut_value(self, y) -> float:
        y = np.asarray(y)
        return float(sum(w for i, j, w in self.edges if y[i - 1] != y[j - 1]))


def _lines(text: str) -> Iterator[Tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def _number(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: bad number {tok!r}") from None


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: expected an integer, got {tok!r}") from None


def _header(line: str, lineno: int) -> Tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise ParseError(f"line {lineno}: expected 'n m', got {line!r}")
    n, m = _int(parts[0], lineno), _int(parts[1], lineno)
    if n < 1 or m < 0:
        raise ParseError(f"line {lineno}: invalid sizes n={n} m={m}")
    return n, m


def _triplet(line: str, lineno: int, n: int) -> Tuple[int, int, float]:
    parts = line.split()
    if len(parts) != 3:
        raise ParseError(f"line {lineno}: expected 'i j v', got {line!r}")
    i, j, v = _int(parts[0], lineno), _int(parts[1], lineno), _number(parts[2], lineno)
    if not (1 <= i <= n and 1 <= j <= n):
        raise ParseError(f"line {lineno}: index out of range 1..{n}")
    return i, j, v


def _assemble(n: int, entries, lines) -> sp.coo_matrix:
    seen = {}
    rows, cols, vals = [], [], []
    for (i, j, v), lineno in zip(entries, lines):
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(f"line {lineno}: duplicate entry for pair {key} "
                             f"(first at line {seen[key]})")
        seen[key] = lineno
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n))


def parse_sparse(text: str, diag_to_linear: bool = False,
                 name: str = "instance") -> QuadraticInstance:
    sense = "min"
    header = None
    entries, where = [], []
    linear = {}
    for lineno, line in _lines(text):
        if line.startswith("#"):
            words = line[1:].split()
            if len(words) == 2 and words[0] == "sense":
                if words[1] not in ("min", "max"):
                    raise ParseError(f"line {lineno}: unknown sense {words[1]!r}")
                sense = words[1]
            elif len(words) == 2 and words[0] == "name":
                name = words[1]
            elif len(words) == 3 and words[0] == "b":
                linear[lineno] = (words[1], words[2])
            continue
        if header is None:
            header = _header(line, lineno)
            continue
        entries.append(_triplet(line, lineno, header[0]))
        where.append(lineno)
    if header is None:
        raise ParseError("empty input: missing 'n m' header")
    n, m = header
    if len(entries) != m:
        raise ParseError(f"header announces {m} entries, found {len(entries)}")
    b = np.zeros(n)
    for lineno, (i, v) in linear.items():
        i = _int(i, lineno)
        if not 1 <= i <= n:
            raise ParseError(f"line {lineno}: index out of range 1..{n}")
        b[i - 1] += _number(v, lineno)
    Q = _assemble(n, entries, where).tocsr()
    if diag_to_linear:
        # valid on binaries only: x_i^2 == x_i
        b = b + Q.diagonal()
        Q.setdiag(0.0)
        Q.eliminate_zeros()
    return QuadraticInstance.create(Q, b, sense=sense, name=name)


def serialize_sparse(inst: QuadraticInstance) -> str:
    """Inverse of :func:`parse_sparse`, written in the native sense."""
    sign = -1.0 if inst.native_sense == "max" else 1.0
    U = sp.triu(sp.coo_matrix(inst.dense() if not inst.is_sparse else inst.Q))
    U.sum_duplicates()
    order = np.lexsort((U.col, U.row))
    out = [f"# sense {inst.native_sense}"]
    if inst.name and not any(c.isspace() for c in inst.name):
        out.append(f"# name {inst.name}")
    for i, v in enumerate(inst.b):
        if v != 0:
            out.append(f"# b {i + 1} {_fmt(sign * v)}")
    out.append(f"{inst.n} {int(np.count_nonzero(U.data))}")
    for k in order:
        if U.data[k] != 0:
            out.append(f"{U.row[k] + 1} {U.col[k] + 1} {_fmt(sign * U.data[k])}")
    return "\n".join(out) + "\n"


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def parse_orlib(text: str, name: str = "orlib") -> List[QuadraticInstance]:
    it = _lines(text)
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ParseError("empty input: missing problem count") from None
    count = _int(line.split()[0], lineno)
    if count < 0:
        raise ParseError(f"line {lineno}: negative problem count")
    out = []
    for k in range(1, count + 1):
        try:
            lineno, line = next(it)
            n, m = _header(line, lineno)
            entries, where = [], []
            for _ in range(m):
                lineno, line = next(it)
                entries.append(_triplet(line, lineno, n))
                where.append(lineno)
        except StopIteration:
            raise ParseError(f"problem {k}: file truncated") from None
        except ParseError as exc:
            raise ParseError(f"problem {k}: {exc}") from None
        Q = _assemble(n, entries, where).tocsr()
        out.append(QuadraticInstance.create(Q, None, sense="max", name=f"{name}-{k}"))
    extra = next(it, None)
    if extra is not None:
        raise ParseError(f"line {extra[0]}: data after the announced {count} problems")
    return out


def parse_graph(text: str) -> WeightedGraph:
    header = None
    merged = {}
    duplicates = 0
    seen_edges = 0
    for lineno, line in _lines(text):
        if line.startswith("#"):
            continue
        if header is None:
            header = _header(line, lineno)
            continue
        i, j, w = _triplet(line, lineno, header[0])
        if i == j:
            raise ParseError(f"line {lineno}: self-loop on vertex {i}")
        key = (min(i, j), max(i, j))
        if key in merged:
            duplicates += 1
            merged[key] += w
        else:
            merged[key] = w
        seen_edges += 1
    if header is None:
        raise ParseError("empty input: missing 'n m' header")
    n, m = header
    if seen_edges != m:
        raise ParseError(f"header announces {m} edges, found {seen_edges}")
    if duplicates:
        log.warning("merged %d duplicate edge(s)", duplicates)
    edges = [(i, j, w) for (i, j), w in sorted(merged.items())]
    return WeightedGraph(n=n, edges=edges, duplicates=duplicates)


def laplacian(g: WeightedGraph) -> sp.csr_matrix:
    if not g.edges:
        return sp.csr_matrix((g.n, g.n))
    i, j, w = (np.array(col) for col in zip(*g.edges))
    W = sp.coo_matrix((np.r_[w, w], (np.r_[i, j] - 1, np.r_[j, i] - 1)),
                      shape=(g.n, g.n)).tocsr()
    deg = np.asarray(W.sum(axis=1)).reshape(-1)
    return sp.csr_matrix(sp.diags(deg) - W)


def maxcut_to_ubqp(g: WeightedGraph, name: str = "maxcut") -> QuadraticInstance:
    """Max-cut as ``max y'Ly`` over 0/1 side indicators ``y``.

    Stored canonically as ``Q = -L``; the native (max) objective is the cut.
    """
    return QuadraticInstance.create(laplacian(g), None, sense="max", name=name)


def gen_random(n: int, seed: int = 0, diag_range: Sequence[int] = (-100, 100),
               offdiag_range: Sequence[int] = (-50, 50), density: float = 1.0,
               name: str = None) -> QuadraticInstance:
    """Integer symmetric instance, entries uniform on the inclusive ranges.

    Each off-diagonal pair is present with probability ``density``; the
    diagonal is always drawn.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    Q = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    vals = rng.integers(offdiag_range[0], offdiag_range[1], endpoint=True, size=iu[0].size)
    mask = rng.random(iu[0].size) < density
    Q[iu] = np.where(mask, vals, 0)
    Q = Q + Q.T
    Q[np.diag_indices(n)] = rng.integers(diag_range[0], diag_range[1], endpoint=True, size=n)
    return QuadraticInstance.create(Q, None, name=name or f"rand-n{n}-s{seed}")


def load(path, fmt: str, problem: int = 1, diag_to_linear: bool = False) -> QuadraticInstance:
    """Read one instance from ``path``. ``problem`` selects within an
    OR-Library bundle (1-based)."""
    path = Path(path)
    text = path.read_text()
    stem = path.stem
    if fmt == "sparse-min":
        return parse_sparse(text, diag_to_linear=diag_to_linear, name=stem)
    if fmt == "orlib-max":
        probs = parse_orlib(text, name=stem)
        if not 1 <= problem <= len(probs):
            raise ParseError(f"{path}: problem {problem} not in 1..{len(probs)}")
        return probs[problem - 1]
    if fmt == "graph-maxcut":
        return maxcut_to_ubqp(parse_graph(text), name=stem)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
