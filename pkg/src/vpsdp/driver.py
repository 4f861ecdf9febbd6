"""Outer loop: reformation, perturbation, interior start, penalty updates."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (PenaltyState, QuadraticInstance, SolverConfig,
                   binary_distance, eval_f, round_binary)
from .subsolvers import InnerRecord, subsolve

log = logging.getLogger(__name__)


class InitializationError(RuntimeError):
    pass


class EigenError(RuntimeError):
    pass


@dataclass
class IterateTrace:
    s: int
    inner_iters: int
    residual: float
    infeasible_count: int
    alpha_s: float
    h_value: float
    f_rounded: float
    hit_cap: bool = False
    # snapshots, filled only with keep_iterates=True
    x: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None


@dataclass
class OuterState:
    x: np.ndarray
    ps: PenaltyState
    original: QuadraticInstance
    working: QuadraticInstance
    gamma: np.ndarray
    trace: List[IterateTrace] = field(default_factory=list)


@dataclass
class SolveReport:
    x_binary: np.ndarray
    objective: float
    outer_iters: int
    total_inner_iters: int
    wall_time: float
    status: str
    gap_pct: Optional[float] = None
    name: str = ""
    engine: str = ""
    seed: int = 0
    penalty_exact: bool = False
    trace: List[IterateTrace] = field(default_factory=list)

    def to_dict(self, with_trace: bool = True) -> dict:
        out = {
            "name": self.name,
            "engine": self.engine,
            "seed": self.seed,
            "n": int(self.x_binary.size),
            "x_binary": "".join(str(int(v)) for v in self.x_binary),
            "objective": self.objective,
            "outer_iters": self.outer_iters,
            "total_inner_iters": self.total_inner_iters,
            "wall_time": self.wall_time,
            "status": self.status,
            "gap_pct": self.gap_pct,
            "penalty_exact": self.penalty_exact,
        }
        if with_trace:
            out["trace"] = [{k: v for k, v in asdict(t).items() if k not in ("x", "p")}
                            for t in self.trace]
        return out


def choose_gamma(inst: QuadraticInstance) -> np.ndarray:
    return 2.0 * inst.row_abs_sum() + np.abs(inst.b) + 1.0


def reformulate(inst: QuadraticInstance, gamma) -> QuadraticInstance:
    """``Q + Diag(gamma)``, ``b - gamma``: same objective on every binary point."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (inst.n,):
        raise ValueError(f"gamma has length {gamma.size}, expected {inst.n}")
    if inst.is_sparse:
        Q = sp.csr_matrix(inst.Q + sp.diags(gamma))
    else:
        Q = inst.Q + np.diag(gamma)
    return inst.replace(Q=Q, b=inst.b - gamma)


def perturb(inst: QuadraticInstance, sigma: float, seed: int) -> QuadraticInstance:
    """Add a symmetric N(0, sigma) perturbation to the stored entries of Q.

    Sparse instances are perturbed on their existing pattern (plus the
    diagonal) so the fill stays unchanged.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return inst
    rng = np.random.default_rng(seed)
    if inst.is_sparse:
        U = sp.triu(inst.Q, format="coo")
        diag = np.arange(inst.n)
        pattern = sp.coo_matrix((np.ones(U.nnz + inst.n),
                                 (np.r_[U.row, diag], np.r_[U.col, diag])), shape=U.shape)
        pattern.sum_duplicates()
        mu = rng.normal(0.0, sigma, size=pattern.nnz)
        M = sp.coo_matrix((mu, (pattern.row, pattern.col)), shape=U.shape)
        Q = sp.csr_matrix(inst.Q + M + sp.triu(M, k=1).T)
    else:
        n = inst.n
        iu = np.triu_indices(n)
        M = np.zeros((n, n))
        M[iu] = rng.normal(0.0, sigma, size=iu[0].size)
        M = M + np.triu(M, 1).T
        Q = inst.Q + M
    return inst.replace(Q=Q)


def init_x0(working: QuadraticInstance) -> np.ndarray:
    """Stationary point of the reformed objective: solve ``2 Q x = -b``.

    With ``working`` built from :func:`choose_gamma` this is
    ``2(Q + Diag(gamma)) x = gamma - b`` and the solution is strictly interior.
    """
    rhs = -working.b
    try:
        if working.is_sparse:
            x = spla.spsolve(sp.csc_matrix(2.0 * working.Q), rhs)
        else:
            x = scipy.linalg.solve(2.0 * working.Q, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise InitializationError(f"initial linear solve failed: {exc}") from exc
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InitializationError("initial linear solve produced non-finite values")
    return x


def smallest_eigenvalue(A, dense_max: int = 2000) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Dense LAPACK up to ``dense_max`` rows, Lanczos (ARPACK) above.
    """
    m = A.shape[0]
    if m <= dense_max:
        A = A.toarray() if sp.issparse(A) else A
        return float(scipy.linalg.eigvalsh(A, subset_by_index=[0, 0])[0])
    try:
        vals = spla.eigsh(A, k=1, which="SA", tol=1e-12, return_eigenvectors=False)
    except spla.ArpackError as exc:
        raise EigenError(f"Lanczos failed on a {m}x{m} block: {exc}") from exc
    return float(vals[0])


def penalty_alpha(working: QuadraticInstance, ps: PenaltyState, x, eta: float,
                  alpha_floor: float, tau: float = 1e-6,
                  dense_max: int = 2000) -> float:
    """Penalty step ``eta * |lambda_min(Z^-1/2 Qbar_II Z^-1/2)|`` over the
    interior index set ``I``, floored at ``alpha_floor * (1 + max |Qbar_ii|)``.
    Returns 0 when no component is interior."""
    x = np.asarray(x, dtype=float)
    idx = np.flatnonzero(np.minimum(x, 1.0 - x) > tau)
    if idx.size == 0:
        return 0.0
    z = x[idx] - x[idx] ** 2
    scale = 1.0 / np.sqrt(z)
    if sp.issparse(ps.qbar):
        sub = ps.qbar[idx][:, idx]
        M = sp.diags(scale) @ sub @ sp.diags(scale)
        qdiag = np.asarray(sub.diagonal())
    else:
        sub = ps.qbar[np.ix_(idx, idx)]
        M = sub * np.outer(scale, scale)
        qdiag = np.diag(sub)
    lam = smallest_eigenvalue(M, dense_max)
    if not np.isfinite(lam):
        raise EigenError(f"non-finite eigenvalue on interior block of size {idx.size}")
    floor = alpha_floor * (1.0 + float(np.max(np.abs(qdiag))))
    return max(eta * abs(lam), floor)


def penalty_update(working: QuadraticInstance, ps: PenaltyState, x,
                   alpha: float) -> PenaltyState:
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    x = np.asarray(x, dtype=float)
    z = np.maximum(x - x * x, 0.0)
    return PenaltyState.from_p(working, ps.p + alpha * z, s=ps.s + 1)


def default_sigma(inst: QuadraticInstance) -> float:
    return 1e-4 * inst.max_abs()


def prepare(inst: QuadraticInstance, config: SolverConfig) -> OuterState:
    gamma = choose_gamma(inst)
    working = reformulate(inst, gamma)
    if inst.integral:
        sigma = default_sigma(inst) if config.sigma is None else config.sigma
        working = perturb(working, sigma, config.seed)
    x0 = init_x0(working)
    return OuterState(x=x0, ps=PenaltyState.zero(working), original=inst,
                      working=working, gamma=gamma)


def solve(inst: QuadraticInstance, config: Optional[SolverConfig] = None,
          lb: Optional[float] = None, keep_iterates: bool = False,
          on_step: Optional[Callable[[InnerRecord], None]] = None) -> SolveReport:
    """Run the penalty method and report on the original instance.

    ``lb`` is a reference value in the instance's native sense; when given
    the report carries the signed gap.
    """
    from .oracle import gap_pct

    config = config or SolverConfig()
    t0 = time.perf_counter()
    st = prepare(inst, config)
    working = st.working
    x = st.x
    total_inner = 0
    status = "max_outer_reached"
    for _ in range(config.max_outer):
        if binary_distance(x) <= config.outer_tol:
            status = "converged"
            break
        alpha = penalty_alpha(working, st.ps, x, config.eta, config.alpha_floor,
                              config.interior_tau, config.eig_dense_max)
        st.ps = penalty_update(working, st.ps, x, alpha)
        res = subsolve(working, st.ps, x, config, on_step=on_step)
        x = res.x
        total_inner += res.inner_iters
        dist = np.minimum(x, 1.0 - x)
        st.trace.append(IterateTrace(
            s=st.ps.s, inner_iters=res.inner_iters, residual=res.final_residual,
            infeasible_count=int(np.count_nonzero(dist > config.outer_tol)),
            alpha_s=alpha, h_value=res.h_value,
            f_rounded=inst.to_native(eval_f(inst, round_binary(x))),
            hit_cap=res.hit_cap,
            x=x.copy() if keep_iterates else None,
            p=st.ps.p.copy() if keep_iterates else None,
        ))
    else:
        if binary_distance(x) <= config.outer_tol:
            status = "converged"
    st.x = x
    xb = round_binary(x)
    objective = inst.to_native(eval_f(inst, xb))
    elapsed = time.perf_counter() - t0
    report = SolveReport(
        x_binary=xb, objective=objective, outer_iters=st.ps.s,
        total_inner_iters=total_inner, wall_time=elapsed, status=status,
        name=inst.name, engine=config.engine, seed=config.seed,
        penalty_exact=bool(np.all(st.ps.p > working.diagonal())),
        trace=st.trace,
    )
    if lb is not None and lb != 0:
        report.gap_pct = gap_pct(objective, lb, inst.native_sense)
    log.debug("%s: %s after %d outer / %d inner steps in %.3fs", inst.name,
              status, report.outer_iters, total_inner, elapsed)
    return report
