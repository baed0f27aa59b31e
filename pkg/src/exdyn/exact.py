"""Exact rational linear algebra on dense object matrices.

All verification-path matrices are numpy object arrays whose entries are
``int`` or ``fractions.Fraction``; float entries switch the same routines to a
fast numpy float path (used only for irrational parameters and tolerance
checks).
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

from .errors import ShapeError

Scalar = int | Fraction | float


def rising(x: Scalar, m: int) -> Scalar:
    """Rising factorial (x)^(m) = x (x+1) ... (x+m-1); exact for rational x."""
    out = x * 0 + 1
    for i in range(m):
        out = out * (x + i)
    return out


def falling(n: int, k: int) -> int:
    """Falling factorial n!/(n-k)!; zero when k > n."""
    if k > n:
        return 0
    out = 1
    for i in range(k):
        out *= n - i
    return out


def is_float_array(mat: np.ndarray) -> bool:
    if mat.dtype != object:
        return np.issubdtype(mat.dtype, np.floating)
    return any(isinstance(x, float) for x in mat.flat)


def zeros(rows: int, cols: int) -> np.ndarray:
    return np.zeros((rows, cols), dtype=object)


def identity(n: int) -> np.ndarray:
    out = zeros(n, n)
    for i in range(n):
        out[i, i] = 1
    return out


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def _clear_denominators(mat: np.ndarray) -> tuple[np.ndarray, int]:
    """Scale a rational matrix to integer entries; returns (int matrix, scale)."""
    den = 1
    for x in mat.flat:
        if isinstance(x, Fraction):
            den = _lcm(den, x.denominator)
    if den == 1:
        out = np.empty(mat.shape, dtype=object)
        for idx, x in np.ndenumerate(mat):
            out[idx] = x.numerator if isinstance(x, Fraction) else int(x)
        return out, 1
    out = np.empty(mat.shape, dtype=object)
    for idx, x in np.ndenumerate(mat):
        if isinstance(x, Fraction):
            out[idx] = x.numerator * (den // x.denominator)
        else:
            out[idx] = int(x) * den
    return out, den


def _refraction(mat: np.ndarray, den: int) -> np.ndarray:
    if den == 1:
        return mat
    out = np.empty(mat.shape, dtype=object)
    for idx, x in np.ndenumerate(mat):
        out[idx] = Fraction(x, den)
    return out


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact matrix product; clears denominators so the inner loop is integer."""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    if a.size == 0 or b.size == 0:
        return zeros(a.shape[0], b.shape[1])
    if is_float_array(a) or is_float_array(b):
        prod = np.asarray(a, dtype=float) @ np.asarray(b, dtype=float)
        return prod.astype(object)
    ai, da = _clear_denominators(a)
    bi, db = _clear_denominators(b)
    nnz_rows = [np.flatnonzero(row != 0) for row in ai]
    total = sum(len(r) for r in nnz_rows)
    if total * 3 < ai.shape[0] * ai.shape[1]:
        # row-sparse accumulation pays off for structural operators
        prod = np.zeros((a.shape[0], b.shape[1]), dtype=object)
        for i, cols in enumerate(nnz_rows):
            acc = prod[i]
            for k in cols:
                acc = acc + ai[i, k] * bi[k]
            prod[i] = acc
    else:
        prod = ai @ bi
    return _refraction(prod, da * db)


def mat_eq(a: np.ndarray, b: np.ndarray, tol: float | None = None) -> bool:
    return first_difference(a, b, tol) is None


def first_difference(
    a: np.ndarray, b: np.ndarray, tol: float | None = None
) -> tuple[int, int, Scalar, Scalar] | None:
    """First (i, j, a_ij, b_ij) where the matrices differ, or None."""
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if tol is None and (is_float_array(a) or is_float_array(b)):
        tol = 1e-12
    for (i, j), x in np.ndenumerate(a):
        y = b[i, j]
        if tol is None:
            if x != y:
                return i, j, x, y
        else:
            if abs(x - y) > tol * max(1.0, abs(x), abs(y)):
                return i, j, x, y
    return None


def nullspace(mat: np.ndarray) -> list[np.ndarray]:
    """Basis of the exact kernel {v : mat v = 0} by fraction Gauss-Jordan."""
    rows, cols = mat.shape
    m = [[Fraction(mat[i, j]) for j in range(cols)] for i in range(rows)]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot_row = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        pivot = m[r][c]
        m[r] = [x / pivot for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * cols
        v[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            v[pc] = -m[ri][fc]
        basis.append(np.array(v, dtype=object))
    return basis


def format_scalar(x: Scalar) -> str:
    """Render a matrix entry for reports: exact values as 'p/q', floats as repr."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, float):
        return repr(x)
    return str(x)
