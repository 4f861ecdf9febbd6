"""Exhaustive ground truth for small instances, and the GAP metric.

Bit vectors are ordered with x_1 as the most significant bit, so "smallest
code" and "lexicographically smallest vector" coincide.
"""
from __future__ import annotations

import numpy as np

from .core import QuadraticInstance

DEFAULT_LIMIT = 26
# low block enumerated as a dense table; high block looped over
_LOW_BITS = 16


class OracleSizeError(ValueError):
    pass


class UndefinedGapError(ZeroDivisionError):
    pass


def _bit_table(m: int) -> np.ndarray:
    """All ``2**m`` binary rows of length ``m``, row index == code."""
    codes = np.arange(1 << m, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(float)


def brute_force(inst: QuadraticInstance, limit: int = DEFAULT_LIMIT):
    """Exact minimizer over ``{0,1}^n`` in canonical (minimization) form.

    Splits the variables into a leading block of ``h`` bits and a trailing
    block of ``l`` bits. For each leading pattern the trailing objective is
    affine in the table of trailing patterns, so one mat-vec per leading
    pattern evaluates ``2**l`` points.
    """
    n = inst.n
    if n > limit:
        raise OracleSizeError(f"n = {n} exceeds enumeration limit {limit}")
    Q = inst.dense()
    b = inst.b
    l = min(n, _LOW_BITS)
    h = n - l
    QLL, QHL, QHH = Q[h:, h:], Q[:h, h:], Q[:h, :h]
    XL = _bit_table(l)
    fL = np.einsum("ij,jk,ik->i", XL, QLL, XL) + XL @ b[h:]
    best_val, best_code = np.inf, -1
    XH = _bit_table(h) if h else np.zeros((1, 0))
    for hi, xh in enumerate(XH):
        c = 2.0 * (xh @ QHL)
        const = xh @ QHH @ xh + xh @ b[:h]
        vals = fL + XL @ c + const
        j = int(np.argmin(vals))  # first occurrence -> smallest code
        if vals[j] < best_val:
            best_val, best_code = float(vals[j]), (hi << l) | j
    x = np.array([(best_code >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)
    return x, best_val


def gray_code_enumerate(inst: QuadraticInstance, limit: int = 20):
    """Independent enumerator: walk the reflected Gray code, updating the
    objective in O(n) per flip."""
    n = inst.n
    if n > limit:
        raise OracleSizeError(f"n = {n} exceeds enumeration limit {limit}")
    Q = inst.dense()
    b = inst.b
    d = np.diag(Q)
    x = np.zeros(n)
    Qx = np.zeros(n)
    f = 0.0
    best_f, best_x = 0.0, x.copy()
    for i in range(1, 1 << n):
        bit = (i & -i).bit_length() - 1  # position flipped in gray(i)
        j = n - 1 - bit
        delta = 1.0 - 2.0 * x[j]
        # f(x + delta e_j) - f(x) = delta (2 (Qx)_j + b_j) + delta^2 Q_jj
        f += delta * (2.0 * Qx[j] + b[j]) + d[j]
        x[j] += delta
        Qx += delta * Q[:, j]
        if f < best_f or (f == best_f and tuple(x) < tuple(best_x)):
            best_f, best_x = f, x.copy()
    return best_x.astype(np.int8), float(best_f)


def gap_pct(obj: float, lb: float, sense: str = "min") -> float:
    """Signed percentage gap to a reference value, positive when ``obj`` is
    worse than ``lb`` in the given sense."""
    if lb == 0:
        raise UndefinedGapError("gap is undefined for a zero reference value")
    diff = obj - lb if sense == "min" else lb - obj
    return 100.0 * diff / abs(lb)


def abs_gap_pct(obj: float, lb: float) -> float:
    if lb == 0:
        raise UndefinedGapError("gap is undefined for a zero reference value")
    return abs((obj - lb) / lb) * 100.0


def native_optimum(inst: QuadraticInstance, limit: int = DEFAULT_LIMIT):
    """Optimum in the instance's source sense (maximum for max-sense data)."""
    x, f = brute_force(inst, limit)
    return x, inst.to_native(f)
