"""Shared model types and the penalty algebra used by every engine.

All internal arithmetic is in minimization form. An instance read from a
maximization source keeps ``native_sense = "max"`` so reports can flip the
sign back; ``Q`` and ``b`` themselves are already negated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

Matrix = Union[np.ndarray, sp.csr_matrix]

# below this fill ratio Q is kept in CSR form
SPARSE_DENSITY = 0.25


class DimensionError(ValueError):
    pass


def _as_storage(Q, storage: str) -> Matrix:
    if storage == "dense":
        return Q.toarray() if sp.issparse(Q) else np.array(Q, dtype=float)
    if storage == "sparse":
        return sp.csr_matrix(Q, dtype=float)
    if storage != "auto":
        raise ValueError(f"unknown storage {storage!r}")
    n = Q.shape[0]
    nnz = Q.nnz if sp.issparse(Q) else np.count_nonzero(Q)
    if n > 1 and nnz < SPARSE_DENSITY * n * n:
        return sp.csr_matrix(Q, dtype=float)
    return Q.toarray() if sp.issparse(Q) else np.array(Q, dtype=float)


@dataclass(frozen=True, eq=False)
class QuadraticInstance:
    """Minimize ``x'Qx + b'x`` over binary ``x``.

    Build through :meth:`create` so that symmetry, dimensions and the
    canonical sense are enforced.
    """

    Q: Matrix
    b: np.ndarray
    name: str = "instance"
    integral: bool = False
    native_sense: str = "min"

    @classmethod
    def create(cls, Q, b=None, *, sense: str = "min", name: str = "instance",
               storage: str = "auto") -> "QuadraticInstance":
        if sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
        if not sp.issparse(Q):
            Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
            raise DimensionError(f"Q must be a non-empty square matrix, got shape {Q.shape}")
        n = Q.shape[0]
        b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(-1)
        if b.shape != (n,):
            raise DimensionError(f"b has length {b.size}, expected {n}")
        # exact symmetrization: average, then mirror the upper triangle
        if sp.issparse(Q):
            Q = sp.csr_matrix(Q, dtype=float)
            Q = (Q + Q.T) * 0.5
            U = sp.triu(Q, k=1)
            Q = sp.csr_matrix(U + U.T + sp.diags(Q.diagonal()))
        else:
            Q = 0.5 * (Q + Q.T)
            Q = np.triu(Q) + np.triu(Q, 1).T
        if sense == "max":
            Q, b = -Q, -b
        Q = _as_storage(Q, storage)
        vals = Q.data if sp.issparse(Q) else Q
        integral = bool(np.all(vals == np.round(vals)) and np.all(b == np.round(b)))
        return cls(Q=Q, b=b, name=name, integral=integral, native_sense=sense)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.Q)

    def dense(self) -> np.ndarray:
        return self.Q.toarray() if self.is_sparse else self.Q

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.Q.diagonal(), dtype=float)

    def row_abs_sum(self) -> np.ndarray:
        return np.asarray(abs(self.Q).sum(axis=1), dtype=float).reshape(-1)

    def max_abs(self) -> float:
        vals = self.Q.data if self.is_sparse else self.Q
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def to_native(self, value: float) -> float:
        """Convert a canonical (minimization) objective to the source sense."""
        return -value if self.native_sense == "max" else value

    def replace(self, Q=None, b=None, **kw) -> "QuadraticInstance":
        """Copy with new data; ``Q``/``b`` are taken as canonical already."""
        Q = self.Q if Q is None else Q
        b = self.b if b is None else b
        vals = Q.data if sp.issparse(Q) else Q
        integral = bool(np.all(vals == np.round(vals)) and np.all(b == np.round(b)))
        fields = dict(name=self.name, integral=integral, native_sense=self.native_sense)
        fields.update(kw)
        return QuadraticInstance(Q=Q, b=np.asarray(b, dtype=float), **fields)


@dataclass
class PenaltyState:
    """Penalty weights ``p`` with cached ``Q - Diag(p)`` and ``b + p``."""

    p: np.ndarray
    s: int
    qbar: Matrix
    bbar: np.ndarray

    @classmethod
    def zero(cls, inst: QuadraticInstance) -> "PenaltyState":
        return cls.from_p(inst, np.zeros(inst.n))

    @classmethod
    def from_p(cls, inst: QuadraticInstance, p, s: int = 0) -> "PenaltyState":
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape != (inst.n,):
            raise DimensionError(f"p has length {p.size}, expected {inst.n}")
        if np.any(p < 0):
            raise ValueError("penalty weights must be nonnegative")
        if inst.is_sparse:
            qbar = sp.csr_matrix(inst.Q - sp.diags(p))
        else:
            qbar = inst.Q - np.diag(p)
        return cls(p=p, s=s, qbar=qbar, bbar=inst.b + p)

    def is_consistent(self, inst: QuadraticInstance) -> bool:
        ref = PenaltyState.from_p(inst, self.p)
        dq = self.qbar - ref.qbar
        dq = abs(dq).max() if sp.issparse(dq) else np.max(np.abs(dq))
        return dq == 0 and np.array_equal(self.bbar, ref.bbar)


@dataclass
class SolverConfig:
    """Run parameters. Defaults for eta, epsilon, sigma, alpha_floor and the
    BB clamps are engineering choices; the tolerances and caps follow the
    published experiment settings."""

    engine: str = "pabb"
    inner_tol: float = 1e-5
    outer_tol: float = 1e-5
    max_inner: int = 10000
    max_outer: int = 1000
    eta: float = 0.5
    epsilon: float = 1e-6
    # None -> 1e-4 * max|Q_ij|, used only for integral data
    sigma: Optional[float] = None
    alpha_floor: float = 1e-3
    seed: int = 0
    bb_alpha_min: float = 1e-10
    bb_alpha_max: float = 1e10
    kkt_tau: float = 1e-6
    interior_tau: float = 1e-6
    eig_dense_max: int = 2000

    def __post_init__(self):
        if self.engine not in ("ppa", "pabb"):
            raise ValueError(f"engine must be 'ppa' or 'pabb', got {self.engine!r}")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        for name in ("inner_tol", "outer_tol", "epsilon", "alpha_floor",
                     "bb_alpha_min", "bb_alpha_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.bb_alpha_min > self.bb_alpha_max:
            raise ValueError("bb_alpha_min exceeds bb_alpha_max")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 < self.kkt_tau < 0.5 or not 0 < self.interior_tau < 0.5:
            raise ValueError("classification thresholds must lie in (0, 0.5)")


def _check_len(inst: QuadraticInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n,):
        raise DimensionError(f"vector has shape {x.shape}, expected ({inst.n},)")
    return x


def eval_f(inst: QuadraticInstance, x) -> float:
    x = _check_len(inst, x)
    return float(x @ (inst.Q @ x) + inst.b @ x)


def eval_h(inst: QuadraticInstance, ps: PenaltyState, x) -> float:
    """Penalized objective ``f(x) + sum p_i (x_i - x_i^2)``.

    The penalty term vanishes exactly on binary points, so ``h == f`` there
    bit for bit.
    """
    x = _check_len(inst, x)
    return eval_f(inst, x) + float(np.sum(ps.p * (x - x * x)))


def eval_h_cached(inst: QuadraticInstance, ps: PenaltyState, x) -> float:
    """Same value as :func:`eval_h` from the cached ``Qbar``, ``bbar``; equal
    up to rounding."""
    x = _check_len(inst, x)
    return float(x @ (ps.qbar @ x) + ps.bbar @ x)


def grad_h(inst: QuadraticInstance, ps: PenaltyState, x) -> np.ndarray:
    x = _check_len(inst, x)
    return 2.0 * (ps.qbar @ x) + ps.bbar


def build_hp(inst: QuadraticInstance, ps: PenaltyState, epsilon: float) -> np.ndarray:
    """Diagonal of the proximal matrix: ``max(sum_i |Q_ji| - p_j, epsilon)``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return np.maximum(inst.row_abs_sum() - ps.p, epsilon)


def project_box(x) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def binary_distance(x) -> float:
    """Infinity-norm distance from ``x`` to the nearest 0/1 vector."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.0
    return float(np.max(np.minimum(x, 1.0 - x)))


def round_binary(x) -> np.ndarray:
    # exact 0.5 goes down
    return (np.asarray(x) > 0.5).astype(np.int8)
