"""Harmonic extension matrices on the N-dimensional Sierpinski gasket.

A harmonic function is identified with its boundary vector ``u`` (values at
``p_1..p_{N+1}``).  ``A_k`` maps ``u`` to the boundary vector of the
restriction to the cell ``K_k``, and a word ``w = w_1...w_m`` acts through the
reversed product ``A_w = A_{w_m} ... A_{w_1}``.

Every routine works in exact rationals by default.  Float mirrors of ``A_k``
and of ``T_k = P A_k P`` are stored on the context; working with ``T_k``
keeps float computations free of the cancellation caused by the constant
component, which ``Q_0`` ignores anyway.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import exact
from .address import Word, WordLike, as_word, barycentric_simplex, embed_point
from .report import Check


@dataclass(frozen=True)
class HarmonicContext:
    N: int
    D: tuple
    A: tuple  # A[k - 1] is A_k
    d: tuple  # d[k - 1] is the k-th column of D
    v: tuple  # v[k - 1] = (1 - e_k) / N
    scale: Fraction  # (N + 3) / (N + 1)
    A_float: np.ndarray = field(repr=False, compare=False)
    T_float: np.ndarray = field(repr=False, compare=False)
    P_float: np.ndarray = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.N + 1

    @property
    def symbols(self) -> tuple:
        return tuple(range(1, self.N + 2))

    def a(self, k: int):
        return self.A[k - 1]

    def e(self, k: int):
        return exact.basis_vector(self.N + 1, k - 1)

    @property
    def one(self):
        return exact.ones(self.N + 1)

    def word(self, w: WordLike) -> Word:
        return as_word(w, self.N)


def _a_entry(N: int, k: int, i: int, j: int) -> Fraction:
    # 1-based indices, entry (i, j) of A_k
    if i == k:
        return Fraction(int(j == k))
    if j == k or i == j:
        return Fraction(2, N + 3)
    return Fraction(1, N + 3)


def build_context(N: int) -> HarmonicContext:
    if not isinstance(N, int) or N < 2:
        raise ValueError(f"dimension N must be an integer >= 2, got {N!r}")
    n = N + 1
    D = tuple(tuple(Fraction(-N if p == q else 1) for q in range(n)) for p in range(n))
    A = tuple(
        tuple(tuple(_a_entry(N, k, i, j) for j in range(1, n + 1)) for i in range(1, n + 1))
        for k in range(1, n + 1)
    )
    d = tuple(tuple(D[r][k] for r in range(n)) for k in range(n))
    v = tuple(tuple(Fraction(int(r != k), N) for r in range(n)) for k in range(n))
    return _with_mirrors(N, D, A, d, v)


def _with_mirrors(N, D, A, d, v) -> HarmonicContext:
    n = N + 1
    A_f = np.array([exact.to_numpy(a) for a in A])
    P_f = np.eye(n) - np.full((n, n), 1.0 / n)
    T_f = np.array([P_f @ a @ P_f for a in A_f])
    return HarmonicContext(N, D, A, d, v, Fraction(N + 3, N + 1), A_f, T_f, P_f)


def with_matrices(ctx: HarmonicContext, A) -> HarmonicContext:
    """Copy of ``ctx`` with replaced extension matrices (used for negative controls)."""
    return _with_mirrors(ctx.N, ctx.D, tuple(exact.mat(a) for a in A), ctx.d, ctx.v)


def word_matrix(ctx: HarmonicContext, w: WordLike, mode: str = "exact"):
    """``A_w = A_{w_m} ... A_{w_1}``; the identity for the empty word."""
    w = ctx.word(w)
    if mode == "float":
        out = np.eye(ctx.size)
        for s in w:
            out = ctx.A_float[s - 1] @ out
        return out
    out = exact.identity(ctx.size)
    for s in w:
        out = exact.mat_mul(ctx.a(s), out)
    if not exact.denominators_divide(out, (ctx.N + 3) ** len(w)):
        raise ArithmeticError(f"denominator growth violated for word {w}")
    return out


def zero_mean_word_matrix(ctx: HarmonicContext, w: WordLike) -> np.ndarray:
    """Float ``T_w = T_{w_m} ... T_{w_1}``; equals ``P A_w P``."""
    out = ctx.P_float.copy()
    for s in ctx.word(w):
        out = ctx.T_float[s - 1] @ out
    return out


def apply_word(ctx: HarmonicContext, w: WordLike, u):
    """``A_w u`` without forming the matrix product."""
    x = exact.vec(u)
    for s in ctx.word(w):
        x = exact.mat_vec(ctx.a(s), x)
    return x


def transpose_apply(ctx: HarmonicContext, w: WordLike, x):
    """``tA_w x = tA_{w_1} ... tA_{w_m} x``."""
    x = exact.vec(x)
    for s in reversed(ctx.word(w).symbols):
        x = exact.vec_mat(x, ctx.a(s))
    return x


def q0(ctx: HarmonicContext, u, v):
    """``Q_0(u, v) = (u, -D v)``."""
    if len(u) != ctx.size or len(v) != ctx.size:
        raise exact.ShapeError(f"expected length {ctx.size}")
    return -exact.quad_form(exact.vec(u), ctx.D, exact.vec(v))


def q0_pairs(u, v):
    """Half-sum of pair differences; independent route to ``Q_0``."""
    n = len(u)
    return sum(
        (Fraction(u[a]) - Fraction(u[b])) * (Fraction(v[a]) - Fraction(v[b]))
        for a in range(n) for b in range(n)
    ) / 2


def project_P(ctx: HarmonicContext, u):
    u = exact.vec(u)
    mean = sum(u, Fraction(0)) / len(u)
    return tuple(x - mean for x in u)


def e_k_basis(ctx: HarmonicContext, k: int) -> list:
    """Integral basis ``e_a - e_b`` of ``E_k`` (a the smallest index other than k)."""
    others = [s for s in ctx.symbols if s != k]
    a0 = others[0]
    return [exact.sub(ctx.e(a0), ctx.e(b)) for b in others[1:]]


def eigen_check(ctx: HarmonicContext) -> list:
    """Exact verification of the eigenstructure of ``A_k`` and ``tA_k``."""
    N = ctx.N
    big = Fraction(N + 1, N + 3)
    small = Fraction(1, N + 3)
    one = ctx.one
    out = []
    for k in ctx.symbols:
        a = ctx.a(k)
        at = exact.transpose(a)
        ek = ctx.e(k)
        dk = ctx.d[k - 1]
        w = exact.sub(one, ek)
        basis = e_k_basis(ctx, k)
        out.append(Check.of("A_k 1 = 1", exact.mat_vec(a, one) == one, N=N, k=k))
        out.append(Check.of("A_k row sums = 1", all(sum(r) == 1 for r in a), N=N, k=k))
        out.append(Check.of("A_k (1 - e_k) = (N+1)/(N+3) (1 - e_k)",
                            exact.mat_vec(a, w) == exact.scale(big, w), N=N, k=k))
        member = all(exact.inner(b, ek) == 0 and exact.inner(b, one) == 0 for b in basis)
        out.append(Check.of("E_k basis membership", member and len(basis) == N - 1, N=N, k=k))
        out.append(Check.of("A_k u = u/(N+3) on E_k",
                            all(exact.mat_vec(a, b) == exact.scale(small, b) for b in basis), N=N, k=k))
        out.append(Check.of("tA_k e_k = e_k", exact.mat_vec(at, ek) == ek, N=N, k=k))
        out.append(Check.of("tA_k d_k = (N+1)/(N+3) d_k",
                            exact.mat_vec(at, dk) == exact.scale(big, dk), N=N, k=k))
        out.append(Check.of("tA_k u = u/(N+3) on E_k",
                            all(exact.mat_vec(at, b) == exact.scale(small, b) for b in basis), N=N, k=k))
    return out


def permutation_check(ctx: HarmonicContext) -> list:
    """``A_k`` equals ``A_1`` with rows/columns 1 and k swapped."""
    out = []
    for k in ctx.symbols[1:]:
        perm = list(range(ctx.size))
        perm[0], perm[k - 1] = perm[k - 1], perm[0]
        out.append(Check.of("A_k from A_1 by permutation",
                            exact.permute_matrix(ctx.a(1), perm) == ctx.a(k), N=ctx.N, k=k))
    return out


def dual_vector_checks(ctx: HarmonicContext) -> list:
    """``tA_i d_j = -tA_j d_i``, the transition coefficients, ``(d_i, v_i) = 1`` and ``Q_0(v_i, v_i) = 1/N``."""
    N = ctx.N
    out = []
    for i in ctx.symbols:
        di, vi = ctx.d[i - 1], ctx.v[i - 1]
        out.append(Check.of("(d_i, v_i) = 1", exact.inner(di, vi) == 1, N=N, i=i))
        out.append(Check.of("Q_0(v_i, v_i) = 1/N", q0(ctx, vi, vi) == Fraction(1, N), N=N, i=i))
        for j in ctx.symbols:
            if i == j:
                continue
            dj = ctx.d[j - 1]
            lhs = transpose_apply(ctx, (i,), dj)
            rhs = transpose_apply(ctx, (j,), di)
            out.append(Check.of("tA_i d_j = -tA_j d_i", lhs == exact.scale(-1, rhs), N=N, i=i, j=j))
            trans = exact.scale(Fraction(1, N + 3), exact.sub(di, dj))
            out.append(Check.of("tA_j d_i = (d_i - d_j)/(N+3)", rhs == trans, N=N, i=i, j=j))
    return out


def _point_key(ctx: HarmonicContext, w: Word, corner: int):
    return embed_point(w, corner, barycentric_simplex(ctx.N))


def harmonic_values(ctx: HarmonicContext, u, m: int) -> dict:
    """Values of the harmonic extension of ``u`` on ``V_m``.

    Keys are barycentric coordinates of the points.  Raises ArithmeticError
    when two cells disagree on a shared point.
    """
    u = exact.vec(u)
    values: dict = {}
    for syms in product(ctx.symbols, repeat=m):
        w = Word(syms, ctx.N)
        bv = apply_word(ctx, w, u)
        for c in ctx.symbols:
            key = _point_key(ctx, w, c)
            val = bv[c - 1]
            old = values.setdefault(key, val)
            if old != val:
                raise ArithmeticError(f"gluing mismatch at {key}: {old} != {val}")
    return values


def scaled_level_energy(ctx: HarmonicContext, u, m: int) -> Fraction:
    """``((N+3)/(N+1))^m Q_m`` for the harmonic extension, summed cell by cell."""
    u = exact.vec(u)
    total = Fraction(0)
    for syms in product(ctx.symbols, repeat=m):
        x = apply_word(ctx, syms, u)
        total += q0(ctx, x, x)
    return ctx.scale ** m * total


def corrupted_context(ctx: HarmonicContext, delta=Fraction(1, 1000)) -> HarmonicContext:
    """``ctx`` with one entry of ``A_1`` perturbed; a negative control for verifiers."""
    a1 = [list(r) for r in ctx.a(1)]
    a1[1][1] += delta
    return with_matrices(ctx, (exact.mat(a1),) + ctx.A[1:])

