"""Exact rational linear algebra on small dense matrices.

Scalars are :class:`fractions.Fraction`; vectors are tuples of Fractions and
matrices are tuples of row tuples.  Everything here is pure and allocation
only, so values can be shared freely between threads.  The float mirror of
any object is obtained with :func:`to_numpy`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Vector = tuple  # tuple[Fraction, ...]
Matrix = tuple  # tuple[tuple[Fraction, ...], ...]

DEFAULT_ATOL = 1e-12


class ShapeError(ValueError):
    """Raised when operands have incompatible sizes."""


@dataclass(frozen=True)
class NumericPolicy:
    """Evaluation mode shared by the numeric modules.

    ``exact`` never rounds; ``float`` uses float64 with absolute tolerance
    ``atol`` for comparisons.
    """

    mode: str = "exact"
    atol: float = DEFAULT_ATOL

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown numeric mode {self.mode!r}")

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def close(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(float(a) - float(b)) <= self.atol


EXACT = NumericPolicy("exact")
FLOAT = NumericPolicy("float")


def as_policy(mode) -> NumericPolicy:
    if isinstance(mode, NumericPolicy):
        return mode
    return NumericPolicy(mode)


def frac(x) -> Fraction:
    """Coerce ints, Fractions, floats and ``"p/q"`` strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def vec(values: Iterable) -> Vector:
    return tuple(frac(x) for x in values)


def mat(rows: Iterable[Iterable]) -> Matrix:
    rows = tuple(vec(r) for r in rows)
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ShapeError("ragged matrix rows")
    return rows


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def zeros(n: int) -> Vector:
    return (Fraction(0),) * n


def basis_vector(n: int, index: int) -> Vector:
    """Standard basis vector with a one at 0-based ``index``."""
    return tuple(Fraction(int(i == index)) for i in range(n))


def ones(n: int) -> Vector:
    return (Fraction(1),) * n


def shape(a: Matrix) -> tuple[int, int]:
    return len(a), len(a[0]) if a else 0


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if len(a[0]) != len(b):
        raise ShapeError(f"cannot multiply {shape(a)} by {shape(b)}")
    cols = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def mat_vec(a: Matrix, v: Sequence) -> Vector:
    if len(a[0]) != len(v):
        raise ShapeError(f"cannot apply {shape(a)} to length {len(v)}")
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def vec_mat(v: Sequence, a: Matrix) -> Vector:
    """Row vector times matrix, i.e. ``transpose(a) @ v``."""
    if len(v) != len(a):
        raise ShapeError(f"cannot apply length {len(v)} to {shape(a)}")
    return tuple(sum(v[i] * a[i][j] for i in range(len(v))) for j in range(len(a[0])))


def inner(u: Sequence, v: Sequence):
    if len(u) != len(v):
        raise ShapeError(f"length mismatch {len(u)} != {len(v)}")
    return sum((x * y for x, y in zip(u, v)), Fraction(0))


def norm_sq(u: Sequence):
    return inner(u, u)


def quad_form(u: Sequence, m: Matrix, v: Sequence):
    """``(u, m v)``."""
    return inner(u, mat_vec(m, v))


def add(u: Sequence, v: Sequence) -> Vector:
    if len(u) != len(v):
        raise ShapeError(f"length mismatch {len(u)} != {len(v)}")
    return tuple(x + y for x, y in zip(u, v))


def sub(u: Sequence, v: Sequence) -> Vector:
    if len(u) != len(v):
        raise ShapeError(f"length mismatch {len(u)} != {len(v)}")
    return tuple(x - y for x, y in zip(u, v))


def scale(c, u: Sequence) -> Vector:
    return tuple(c * x for x in u)


def mat_scale(c, a: Matrix) -> Matrix:
    return tuple(tuple(c * x for x in row) for row in a)


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    if shape(a) != shape(b):
        raise ShapeError(f"shape mismatch {shape(a)} != {shape(b)}")
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def permute_matrix(a: Matrix, perm: Sequence[int]) -> Matrix:
    """Simultaneous row/column relabelling: ``result[perm[r]][perm[c]] = a[r][c]``."""
    n = len(a)
    out = [[Fraction(0)] * n for _ in range(n)]
    for r in range(n):
        for c in range(n):
            out[perm[r]][perm[c]] = a[r][c]
    return tuple(tuple(row) for row in out)


def permute_vector(v: Sequence, perm: Sequence[int]) -> Vector:
    out = [Fraction(0)] * len(v)
    for r, x in enumerate(v):
        out[perm[r]] = x
    return tuple(out)


def det(a: Matrix):
    """Determinant by fraction-free elimination on a common-denominator copy."""
    n = len(a)
    if n == 0:
        return Fraction(1)
    m = [list(row) for row in a]
    sign = 1
    result = Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if m[r][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            m[c], m[pivot] = m[pivot], m[c]
            sign = -sign
        p = m[c][c]
        result *= p
        for r in range(c + 1, n):
            f = m[r][c] / p
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return sign * result


def leading_minors(a: Matrix) -> list:
    return [det(tuple(row[:k] for row in a[:k])) for k in range(1, len(a) + 1)]


def solve(a: Matrix, b: Sequence) -> Vector:
    """Solve the square system ``a x = b`` exactly (Gauss-Jordan)."""
    n = len(a)
    if len(b) != n or any(len(r) != n for r in a):
        raise ShapeError("solve needs a square system")
    m = [list(row) + [frac(x)] for row, x in zip(a, b)]
    for c in range(n):
        pivot = next((r for r in range(c, n) if m[r][c] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[pivot] = m[pivot], m[c]
        p = m[c][c]
        m[c] = [x / p for x in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return tuple(row[n] for row in m)


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    cols = [solve(a, basis_vector(n, k)) for k in range(n)]
    return transpose(tuple(cols))


def lstsq_coords(generators: Sequence[Sequence], x: Sequence) -> Vector:
    """Coordinates ``c`` with ``sum_l c_l g_l == x`` for independent generators.

    Solves the normal equations exactly; raises ValueError when ``x`` is not
    in the span.
    """
    g = tuple(vec(v) for v in generators)
    gram = tuple(tuple(inner(p, q) for q in g) for p in g)
    rhs = tuple(inner(p, x) for p in g)
    c = solve(gram, rhs)
    recon = tuple(sum(c[l] * g[l][r] for l in range(len(g))) for r in range(len(x)))
    if recon != tuple(frac(t) for t in x):
        raise ValueError("vector is not in the span of the generators")
    return c


def is_lowest_terms(x: Fraction) -> bool:
    from math import gcd

    return x.denominator > 0 and gcd(x.numerator, x.denominator) == 1


def denominators_divide(a: Matrix, modulus: int) -> bool:
    """True when every entry's denominator divides ``modulus``."""
    return all(modulus % x.denominator == 0 for row in a for x in row)


def to_numpy(a) -> np.ndarray:
    if a and isinstance(a[0], tuple):
        return np.array([[float(x) for x in row] for row in a])
    return np.array([float(x) for x in a])


def fmt(x) -> str:
    """Text form ``p/q`` (or ``p`` for integers)."""
    x = frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def matrix_to_csv(a: Matrix) -> str:
    return "\n".join(",".join(fmt(x) for x in row) for row in a) + "\n"


def sqrt_lower(x: Fraction, bits: int = 64) -> Fraction:
    """Rational lower bound for ``sqrt(x)`` within ``2**-bits``."""
    from math import isqrt

    x = frac(x)
    if x < 0:
        raise ValueError("negative argument")
    scaled = (x.numerator << (2 * bits)) // x.denominator
    return Fraction(isqrt(scaled), 1 << bits)
