"""Densities at dyadic edge points, the gap between cell corners and Hölder checks.

The density at the junction ``psi_{w i}(p_j)`` is
``(d_j, A_{wi} u)^2 / |tA_{wi} d_j|^2``; at an edge endpoint it is the
corner limit.  The helpers below also verify, exactly, the estimates that
bound the gap between the two corners of a cell and lead to a Hölder bound
with exponent ``log2(1 + 1/N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import log2
from typing import Optional

import numpy as np

from . import exact
from .address import DyadicPoint, EdgeAddress, Word, WordLike, dyadic_to_path
from .energy import corner_limit
from .harmonic import HarmonicContext, apply_word, transpose_apply, word_matrix
from .report import Check


def delta_at_vertex(ctx: HarmonicContext, u, w: WordLike, i: int, j: int) -> Fraction:
    """Density at ``psi_{w i}(p_j)``."""
    wi = ctx.word(w) + (i,)
    dj = ctx.d[j - 1]
    num = exact.inner(dj, apply_word(ctx, wi, u)) ** 2
    return num / exact.norm_sq(transpose_apply(ctx, wi, dj))


def _corner_terms(ctx, a, u, i):
    # (d_i, A u) and the vector ((d_i, A e_k))_k = tA d_i
    di = ctx.d[i - 1]
    return exact.inner(di, exact.mat_vec(a, u)), exact.vec_mat(di, a)


def delta_gap(ctx: HarmonicContext, u, w: WordLike, i: int, j: int) -> Fraction:
    """Corner density at ``psi_w(p_i)`` minus that at ``psi_w(p_j)``.

    With ``a = (d_i, A_w u)``, ``b = (d_j, A_w u)`` and ``a_k, b_k`` the same
    pairings against ``e_k``, the gap is
    ``sum_k (a b_k - b a_k)(a b_k + b a_k) / (sum a_k^2 * sum b_k^2)``.
    """
    if i == j:
        raise ValueError("delta_gap needs i != j")
    a_w = word_matrix(ctx, w)
    u = exact.vec(u)
    a, ak = _corner_terms(ctx, a_w, u, i)
    b, bk = _corner_terms(ctx, a_w, u, j)
    num = sum(((a * y - b * x) * (a * y + b * x) for x, y in zip(ak, bk)), Fraction(0))
    return num / (exact.norm_sq(ak) * exact.norm_sq(bk))


def _over_ij(w2: Word, i: int, j: int):
    if any(s not in (i, j) for s in w2):
        raise ValueError(f"word {w2} uses symbols other than {i} and {j}")


def _minor(ctx, a, u, i, j, k):
    di, dj = ctx.d[i - 1], ctx.d[j - 1]
    au = exact.mat_vec(a, u)
    ak = exact.mat_vec(a, ctx.e(k))
    return exact.inner(di, au) * exact.inner(dj, ak) - exact.inner(di, ak) * exact.inner(dj, au)


def det_identity_check(ctx: HarmonicContext, u, w: WordLike, w2: WordLike, k: int,
                       i: int, j: int) -> bool:
    """2x2 determinant identity along ``w w'`` with ``w'`` over ``{i, j}``.

    ``det(w w') = ((N+1)/(N+3)^2)^{|w'|} det(w)`` exactly.
    """
    w, w2 = ctx.word(w), ctx.word(w2)
    _over_ij(w2, i, j)
    u = exact.vec(u)
    lhs = _minor(ctx, word_matrix(ctx, w + w2), u, i, j, k)
    rhs = Fraction(ctx.N + 1, (ctx.N + 3) ** 2) ** len(w2) * _minor(ctx, word_matrix(ctx, w), u, i, j, k)
    return lhs == rhs


def det_identity_sweep(ctx: HarmonicContext, u, w: WordLike, i: int, j: int, n_max: int) -> tuple:
    """Exhaustive determinant identity over ``{i,j}^n``, ``n <= n_max``.

    Matrices are extended one symbol at a time.  Returns ``(words checked,
    first failing word or None)``.
    """
    w = ctx.word(w)
    u = exact.vec(u)
    base = word_matrix(ctx, w)
    ref = [_minor(ctx, base, u, i, j, k) for k in ctx.symbols]
    factor = Fraction(ctx.N + 1, (ctx.N + 3) ** 2)
    level = [((), base)]
    count = 0
    for n in range(n_max + 1):
        scale_n = factor ** n
        for syms, a in level:
            count += 1
            if any(_minor(ctx, a, u, i, j, k) != scale_n * r for k, r in zip(ctx.symbols, ref)):
                return count, Word(syms, ctx.N)
        if n < n_max:
            level = [(syms + (s,), exact.mat_mul(ctx.a(s), a)) for syms, a in level for s in (i, j)]
    return count, None


def dual_norm_sweep(ctx: HarmonicContext, i: int, j: int, n_max: int) -> tuple:
    """Squared lower bound on ``|tA_{w'} d_l|`` for all ``w'`` over ``{i,j}``, both ``l``.

    ``tA_{s w''} d = tA_s (tA_{w''} d)``, so words grow on the left.
    Returns ``(vectors checked, first failure (word, l) or None)``.
    """
    count = 0
    for l in (i, j):
        level = [((), ctx.d[l - 1])]
        for n in range(n_max + 1):
            floor = dual_norm_floor(ctx, n)
            for syms, x in level:
                count += 1
                if exact.norm_sq(x) < floor:
                    return count, (Word(syms, ctx.N), l)
            if n < n_max:
                level = [((s,) + syms, exact.vec_mat(x, ctx.a(s))) for syms, x in level for s in (i, j)]
    return count, None


def dual_norm_floor(ctx: HarmonicContext, n: int) -> Fraction:
    """``(N+1) ((N+1)/(N+3))^{2n} N^{-n}``, the squared lower bound."""
    N = ctx.N
    return (N + 1) * Fraction(N + 1, N + 3) ** (2 * n) / Fraction(N) ** n


def dual_norm_lower_bound_check(ctx: HarmonicContext, w2: WordLike, l: int, i: int, j: int) -> bool:
    w2 = ctx.word(w2)
    _over_ij(w2, i, j)
    if l not in (i, j):
        raise ValueError("l must be i or j")
    return exact.norm_sq(transpose_apply(ctx, w2, ctx.d[l - 1])) >= dual_norm_floor(ctx, len(w2))


def psd_minors(ctx: HarmonicContext, k: int) -> list:
    """Leading minors of ``(N+3)^2 A_k tA_k - I`` with ``k`` moved to the first position."""
    a = ctx.a(k)
    b = exact.mat_sub(exact.mat_scale((ctx.N + 3) ** 2, exact.mat_mul(a, exact.transpose(a))),
                      exact.identity(ctx.size))
    perm = list(range(ctx.size))
    perm[0], perm[k - 1] = perm[k - 1], perm[0]
    return exact.leading_minors(exact.permute_matrix(b, perm))


def psd_floor_check(ctx: HarmonicContext, k: int, samples=()) -> list:
    """Minor signs of the floor matrix and its consequence on sample words.

    ``samples`` holds ``(w, w', l)`` triples for the contraction floor
    ``|tA_{w w'} d_l|^2 >= (N+3)^{-2|w|} |tA_{w'} d_l|^2``.
    """
    N = ctx.N
    minors = psd_minors(ctx, k)
    out = [
        Check.of("first minor", minors[0] == N * N + 6 * N + 8, N=N, k=k, value=exact.fmt(minors[0])),
        Check.of("second minor", minors[1] == N ** 3 + 8 * N * N + 20 * N + 12, N=N, k=k,
                 value=exact.fmt(minors[1])),
        Check.of("remaining minors vanish", all(m == 0 for m in minors[2:]), N=N, k=k),
    ]
    for w, w2, l in samples:
        w, w2 = ctx.word(w), ctx.word(w2)
        lhs = exact.norm_sq(transpose_apply(ctx, w + w2, ctx.d[l - 1]))
        rhs = Fraction(1, (N + 3) ** (2 * len(w))) * exact.norm_sq(transpose_apply(ctx, w2, ctx.d[l - 1]))
        out.append(Check.of("contraction floor", lhs >= rhs, w=str(w), w2=str(w2), l=l))
    return out


# --- the Hölder constant ---------------------------------------------------

@dataclass(frozen=True)
class GapConstant:
    c: Fraction  # rigorous rational lower bound of the constant
    terms: tuple  # per k: lower bound of |A_w u| |A_w e_k| |det_k(w)|
    minors: tuple  # det_k(w), exact

    def bound(self, ctx: HarmonicContext, n: int) -> Fraction:
        N = ctx.N
        return self.c / (N + 1) * Fraction(N, N + 1) ** n


def gap_constant(ctx: HarmonicContext, u, w: WordLike, i: int, j: int, bits: int = 64) -> GapConstant:
    """``c = 2 (N+3)^{4|w|} |A_w u| sum_k |A_w e_k| |det_k(w)|``.

    Each product of norms sits under one square root, replaced by a rational
    lower bound; a bound that holds with this ``c`` holds with the true one.
    """
    w = ctx.word(w)
    u = exact.vec(u)
    a = word_matrix(ctx, w)
    au_sq = exact.norm_sq(exact.mat_vec(a, u))
    minors, terms = [], []
    for k in ctx.symbols:
        col_sq = exact.norm_sq(exact.mat_vec(a, ctx.e(k)))
        det_k = _minor(ctx, a, u, i, j, k)
        minors.append(det_k)
        terms.append(exact.sqrt_lower(au_sq * col_sq * det_k * det_k, bits))
    c = 2 * (ctx.N + 3) ** (4 * len(w)) * sum(terms, Fraction(0))
    return GapConstant(c, tuple(terms), tuple(minors))


@dataclass
class HolderBoundReport:
    constant: GapConstant
    checked: int
    worst_slack: Fraction  # min over w' of bound - |gap|
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def holder_bound_check(ctx: HarmonicContext, u, w: WordLike, i: int, j: int, n_max: int) -> HolderBoundReport:
    """``|gap(w w')| <= c/(N+1) (N/(N+1))^n`` for every ``w'`` in ``{i,j}^n``, ``n <= n_max``."""
    if n_max > 12:
        raise ValueError("exhaustive check is limited to n_max <= 12")
    w = ctx.word(w)
    u = exact.vec(u)
    const = gap_constant(ctx, u, w, i, j)
    N = ctx.N
    a = ctx.a
    di, dj = ctx.d[i - 1], ctx.d[j - 1]
    level = [word_matrix(ctx, w)]
    words = [()]
    checked, slack, bad = 0, None, []
    for n in range(n_max + 1):
        bound = const.bound(ctx, n)
        for mat_, syms in zip(level, words):
            au = exact.mat_vec(mat_, u)
            x, y = exact.inner(di, au), exact.inner(dj, au)
            xk, yk = exact.vec_mat(di, mat_), exact.vec_mat(dj, mat_)
            gap = x * x / exact.norm_sq(xk) - y * y / exact.norm_sq(yk)
            s = bound - abs(gap)
            slack = s if slack is None else min(slack, s)
            checked += 1
            if s < 0:
                bad.append(Word(syms, N))
        if n < n_max:
            level = [exact.mat_mul(a(sym), m_) for m_ in level for sym in (i, j)]
            words = [syms + (sym,) for syms in words for sym in (i, j)]
    return HolderBoundReport(const, checked, slack, bad)


# --- profiles --------------------------------------------------------------

@dataclass(frozen=True)
class EdgeDensitySample:
    t: Fraction
    density: object
    numerator: object = None
    denominator: object = None


def _exact_profile(ctx, u, edge: EdgeAddress, depth: int) -> list:
    u = exact.vec(u)
    _i, _j = edge.i, edge.j
    samples = []
    for m in range((1 << depth) + 1):
        p = DyadicPoint(m, depth, edge)
        x, corner = dyadic_to_path(p)
        if len(x) == 0:
            lim = corner_limit(ctx, u, edge.prefix, corner)
            samples.append(EdgeDensitySample(p.t, lim.value, lim.inner ** 2, lim.dual_norm_sq))
            continue
        wi = edge.prefix + x
        dj = ctx.d[corner - 1]
        num = exact.inner(dj, apply_word(ctx, wi, u)) ** 2
        den = exact.norm_sq(transpose_apply(ctx, wi, dj))
        samples.append(EdgeDensitySample(p.t, num / den, num, den))
    return samples


def _float_profile(ctx, u, edge: EdgeAddress, depth: int) -> np.ndarray:
    """Densities at ``m / 2**depth`` via ``T`` products, level by level."""
    i, j = edge.i, edge.j
    ti, tj = ctx.T_float[i - 1], ctx.T_float[j - 1]
    uf = np.array([float(x) for x in u])
    di = exact.to_numpy(ctx.d[i - 1])
    dj = exact.to_numpy(ctx.d[j - 1])
    base = word_matrix(ctx, edge.prefix, "float")
    base = ctx.P_float @ base @ ctx.P_float

    def corner(tw, d):
        return float(d @ tw @ uf) ** 2 / float(np.sum((tw.T @ d) ** 2))

    out = np.empty((1 << depth) + 1)
    out[0] = corner(base, di)
    out[-1] = corner(base, dj)
    stack = base[None]
    for level in range(1, depth + 1):
        wi = np.einsum("ab,wbc->wac", ti, stack)
        num = (wi @ uf) @ dj
        den = np.sum(np.einsum("wba,b->wa", wi, dj) ** 2, axis=1)
        step = 1 << (depth - level)
        out[step::2 * step] = num * num / den
        if level < depth:
            stack = np.stack([wi, np.einsum("ab,wbc->wac", tj, stack)], axis=1).reshape(-1, *base.shape)
    return out


def edge_profile(ctx: HarmonicContext, u, edge: EdgeAddress, depth: int, mode: str = "exact"):
    """Density samples at all ``m / 2**depth``, sorted by ``t``.

    Exact mode (depth <= 12) returns EdgeDensitySample objects; float mode
    (depth <= 20) returns an array of densities.
    """
    if mode == "float":
        if depth > 20:
            raise ValueError("float profiles are limited to depth 20")
        return _float_profile(ctx, u, edge, depth)
    if depth > 12:
        raise ValueError("exact profiles are limited to depth 12")
    return _exact_profile(ctx, u, edge, depth)


def profile_rows(samples, depth: Optional[int] = None) -> list:
    """CSV lines ``t_num,t_den,t,density`` (plus ``density_exact`` for exact samples)."""
    if isinstance(samples, np.ndarray):
        size = len(samples) - 1
        rows = ["t_num,t_den,t,density"]
        for m, v in enumerate(samples):
            t = Fraction(m, size)
            rows.append(f"{t.numerator},{t.denominator},{float(t):.17g},{float(v):.17g}")
        return rows
    rows = ["t_num,t_den,t,density,density_exact"]
    for s in samples:
        rows.append(f"{s.t.numerator},{s.t.denominator},{float(s.t):.17g},{float(s.density):.17g},"
                    f"{exact.fmt(s.density)}")
    return rows


@dataclass(frozen=True)
class HolderReport:
    exponent: float
    sup_quotient: float
    worst_pair: tuple  # (t, t') as floats


def holder_exponent(N: int) -> float:
    return log2(1 + 1 / N)


def empirical_holder(values, exponent: float) -> HolderReport:
    """Sup of ``|f(t) - f(t')| / |t - t'|^exponent`` over all pairs of a dyadic profile."""
    f = np.asarray([float(v.density) if isinstance(v, EdgeDensitySample) else float(v) for v in values])
    size = len(f) - 1
    best, pair = 0.0, (0.0, 0.0)
    for lag in range(1, size + 1):
        diff = np.abs(f[lag:] - f[:-lag])
        k = int(np.argmax(diff))
        q = float(diff[k]) / (lag / size) ** exponent
        if q > best:
            best, pair = q, (k / size, (k + lag) / size)
    return HolderReport(exponent, best, pair)
