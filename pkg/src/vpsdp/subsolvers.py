"""Fixed-penalty box subproblem: proximal point and projected alternating BB.

Both engines share :func:`kkt_breakdown` as the stopping test.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .core import (PenaltyState, QuadraticInstance, SolverConfig, build_hp,
                   eval_h, grad_h, project_box)


@dataclass
class BBState:
    prev_x: Optional[np.ndarray] = None
    prev_g: Optional[np.ndarray] = None
    k: int = 0
    alpha: float = 0.0
    fallback: bool = False


@dataclass
class KktBreakdown:
    set_I: np.ndarray
    set_K: np.ndarray
    set_J: np.ndarray
    cret1: np.ndarray
    cret2: np.ndarray
    cret3: np.ndarray
    cret: float
    rho: float
    residual: float


@dataclass
class SubsolveResult:
    x: np.ndarray
    inner_iters: int
    final_residual: float
    hit_cap: bool
    h_value: float


@dataclass
class InnerRecord:
    """One inner step, handed to the ``on_step`` hook of :func:`subsolve`."""

    k: int
    residual: float
    h: float
    step: float
    fallback: bool
    x_prev: np.ndarray
    x: np.ndarray
    p: np.ndarray


def ppa_step(inst: QuadraticInstance, ps: PenaltyState, h_p: np.ndarray,
             x: np.ndarray, g: Optional[np.ndarray] = None) -> np.ndarray:
    """Separable proximal step ``P(x - grad / (2 h_p))``."""
    if g is None:
        g = grad_h(inst, ps, x)
    return project_box(x - g / (2.0 * h_p))


def abb_step_length(state: BBState, x: np.ndarray, g: np.ndarray,
                    alpha_min: float = 1e-10, alpha_max: float = 1e10) -> float:
    """Alternating BB length: BB1 on odd ``k``, BB2 on even ``k``.

    Falls back to the previous step when the curvature ``s'y`` is not
    positive or a denominator is negligible; ``state.fallback`` records it.
    """
    s = x - state.prev_x
    y = g - state.prev_g
    ss, sy, yy = float(s @ s), float(s @ y), float(y @ y)
    floor = 1e-16 * (ss + yy)
    odd = state.k % 2 == 1
    state.fallback = sy <= 0 or sy < floor or (not odd and yy < floor)
    if state.fallback:
        return state.alpha
    alpha = ss / sy if odd else sy / yy
    return float(min(max(alpha, alpha_min), alpha_max))


def pabb_step(inst: QuadraticInstance, ps: PenaltyState, state: BBState,
              x: np.ndarray, alpha_min: float = 1e-10,
              alpha_max: float = 1e10, g: Optional[np.ndarray] = None) -> np.ndarray:
    if g is None:
        g = grad_h(inst, ps, x)
    if state.k == 0:
        state.alpha = 1.0 / max(1.0, float(np.max(np.abs(g))))
        state.fallback = False
    else:
        state.alpha = abb_step_length(state, x, g, alpha_min, alpha_max)
    state.prev_x, state.prev_g = x, g
    state.k += 1
    return project_box(x - state.alpha * g)


def _penalty_scale(ps: PenaltyState) -> float:
    q = ps.qbar
    qmax = abs(q).max() if sp.issparse(q) else np.max(np.abs(q))
    return max(1.0, 2.0 * float(qmax), float(np.max(np.abs(ps.bbar))))


def kkt_breakdown(inst: QuadraticInstance, ps: PenaltyState, x: np.ndarray,
                  tau: float = 1e-6, rho: Optional[float] = None,
                  g: Optional[np.ndarray] = None) -> KktBreakdown:
    """Scaled first-order residual of the box subproblem at ``x``.

    Indices within ``tau`` of a bound are treated as sitting on it; the
    multiplier conditions are checked on the gradient at the snapped point.
    ``rho`` and the gradient ``g`` at ``x`` may be passed in when known.
    """
    x = np.asarray(x, dtype=float)
    lo = x <= tau
    hi = x >= 1.0 - tau
    mid = ~(lo | hi)
    xs = np.where(lo, 0.0, np.where(hi, 1.0, x))
    if g is None:
        g = 2.0 * (ps.qbar @ xs) + ps.bbar
    else:
        moved = np.flatnonzero(xs != x)
        if moved.size:
            g = g + 2.0 * (ps.qbar[:, moved] @ (xs - x)[moved])
    cret1, cret2, cret3 = g[mid], g[lo], g[hi]
    cret = max(
        float(np.max(np.abs(cret1))) if cret1.size else 0.0,
        float(np.max(-np.minimum(cret2, 0.0))) if cret2.size else 0.0,
        float(np.max(np.maximum(cret3, 0.0))) if cret3.size else 0.0,
    )
    if rho is None:
        rho = _penalty_scale(ps)
    return KktBreakdown(
        set_I=np.flatnonzero(mid), set_K=np.flatnonzero(hi), set_J=np.flatnonzero(lo),
        cret1=cret1, cret2=cret2, cret3=cret3, cret=cret, rho=rho, residual=cret / rho,
    )


def _residual(qbar, x: np.ndarray, g: np.ndarray, tau: float) -> float:
    """Unscaled ``cret`` of :func:`kkt_breakdown`, without the bookkeeping."""
    lo = x <= tau
    hi = x >= 1.0 - tau
    xs = np.where(lo, 0.0, np.where(hi, 1.0, x))
    moved = np.flatnonzero(xs != x)
    if moved.size:
        g = g + 2.0 * (qbar[:, moved] @ (xs - x)[moved])
    r = np.where(lo, -g, np.where(hi, g, np.abs(g)))
    return max(float(r.max()), 0.0)


def subsolve(inst: QuadraticInstance, ps: PenaltyState, x0: np.ndarray,
             config: SolverConfig,
             on_step: Optional[Callable[[InnerRecord], None]] = None) -> SubsolveResult:
    """Run the configured engine from ``x0`` until the KKT residual is at
    most ``config.inner_tol`` or ``config.max_inner`` steps are taken."""
    x = project_box(x0)
    rho = _penalty_scale(ps)
    tau = config.kkt_tau
    qbar, bbar = ps.qbar, ps.bbar
    g = 2.0 * (qbar @ x) + bbar
    residual = _residual(qbar, x, g, tau) / rho
    k = 0
    if config.engine == "ppa":
        h_p = build_hp(inst, ps, config.epsilon)
        inv = 1.0 / (2.0 * h_p)
        step = lambda x, g: np.clip(x - g * inv, 0.0, 1.0)
    else:
        state = BBState()
        step = lambda x, g: pabb_step(inst, ps, state, x, config.bb_alpha_min,
                                      config.bb_alpha_max, g)
    while residual > config.inner_tol and k < config.max_inner:
        x_new = step(x, g)
        k += 1
        g = 2.0 * (qbar @ x_new) + bbar
        residual = _residual(qbar, x_new, g, tau) / rho
        if on_step is not None:
            if config.engine == "ppa":
                length, flag = float(np.max(1.0 / (2.0 * h_p))), False
            else:
                length, flag = state.alpha, state.fallback
            on_step(InnerRecord(k=k, residual=residual, h=eval_h(inst, ps, x_new),
                                step=length, fallback=flag, x_prev=x, x=x_new,
                                p=ps.p))
        x = x_new
    return SubsolveResult(
        x=x, inner_iters=k, final_residual=residual,
        hit_cap=(k == config.max_inner and residual > config.inner_tol),
        h_value=eval_h(inst, ps, x),
    )
