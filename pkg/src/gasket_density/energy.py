"""Energy measures of harmonic functions and the Kusuoka measure on cells.

``nu_h(K_w) = 2 s^{|w|} Q_0(A_w u, A_w u)`` with ``s = (N+3)/(N+1)``, and
``nu = sum_k nu_{h_k}``.  Exact mode works in rationals; float mode runs
through ``T_w = P A_w P`` so that small ratios keep full relative accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import log, sqrt
from typing import Optional

import numpy as np

from . import derham, exact
from .address import Word, WordLike
from .harmonic import (
    HarmonicContext,
    apply_word,
    project_P,
    q0,
    transpose_apply,
    word_matrix,
    zero_mean_word_matrix,
)
from .report import Check


@dataclass(frozen=True)
class CellMeasureValue:
    word: Word
    value: object
    kind: str  # "single-h" or "kusuoka"


@dataclass(frozen=True)
class RatioLimit:
    """Limit of the cell ratio along ``w i^n``."""

    value: object
    inner: object  # (d_i, A_w u)
    dual_norm_sq: object  # |tA_w d_i|^2
    energy_limit: object  # lim s^n nu_h(K_{w i^n})


def _float_mode(mode) -> bool:
    return not exact.as_policy(mode).exact


def _u_float(u) -> np.ndarray:
    return np.array([float(x) for x in u])


def cell_energy(ctx: HarmonicContext, u, w: WordLike, mode="exact"):
    w = ctx.word(w)
    if _float_mode(mode):
        y = zero_mean_word_matrix(ctx, w) @ _u_float(u)
        return 2.0 * float(ctx.scale) ** len(w) * (ctx.N + 1) * float(y @ y)
    x = apply_word(ctx, w, u)
    return 2 * ctx.scale ** len(w) * q0(ctx, x, x)


def _kusuoka_q(ctx: HarmonicContext, a) -> Fraction:
    # sum_k Q_0(A e_k, A e_k) = trace(tA (-D) A)
    return sum((q0(ctx, col, col) for col in exact.transpose(a)), Fraction(0))


def kusuoka_cell(ctx: HarmonicContext, w: WordLike, mode="exact"):
    w = ctx.word(w)
    if _float_mode(mode):
        t = zero_mean_word_matrix(ctx, w)
        return 2.0 * float(ctx.scale) ** len(w) * (ctx.N + 1) * float(np.sum(t * t))
    return 2 * ctx.scale ** len(w) * _kusuoka_q(ctx, word_matrix(ctx, w))


def cell_ratio(ctx: HarmonicContext, u, w: WordLike, mode="exact"):
    """``nu_h(K_w) / nu(K_w)``; the common scale factor cancels."""
    w = ctx.word(w)
    if _float_mode(mode):
        t = zero_mean_word_matrix(ctx, w)
        y = t @ _u_float(u)
        return float(y @ y) / float(np.sum(t * t))
    a = word_matrix(ctx, w)
    x = exact.mat_vec(a, exact.vec(u))
    return q0(ctx, x, x) / _kusuoka_q(ctx, a)


def corner_limit(ctx: HarmonicContext, u, w: WordLike, i: int) -> RatioLimit:
    w = ctx.word(w)
    di = ctx.d[i - 1]
    c = exact.inner(di, apply_word(ctx, w, u))
    den = exact.norm_sq(transpose_apply(ctx, w, di))
    return RatioLimit(c * c / den, c, den, Fraction(2, ctx.N) * ctx.scale ** len(w) * c * c)


@dataclass
class ConvergenceReport:
    energies: list  # s^n nu_h(K_{w i^n})
    ratios: list
    vector_errors: list  # |s^n P A_i^n y - limit|
    energy_limit: float
    ratio_limit: float
    vector_error_ratio: float  # fitted geometric rate of vector_errors
    energy_error_ratio: float
    kusuoka_inf: float
    kusuoka_sup: float
    checks: list


def _fit_ratio(errors, lo: int, hi: int) -> float:
    n = np.arange(lo, hi)
    e = np.asarray(errors[lo:hi], dtype=float)
    keep = e > 0
    if keep.sum() < 2:
        return 0.0
    slope = np.polyfit(n[keep], np.log(e[keep]), 1)[0]
    return float(np.exp(slope))


def convergence_rate_check(ctx: HarmonicContext, u, w: WordLike, i: int, n_max: int = 40,
                           fit_window: tuple = (2, 20)) -> ConvergenceReport:
    """Float iteration along ``w i^n`` against the exact limits.

    The zero-mean boundary vector rescaled by ``s^n`` converges to
    ``((d_i, y)/N) P(1 - e_i)`` at rate ``1/(N+1)``; the rescaled energy is
    its squared norm times a constant, and since the error lies in ``E_i``
    (orthogonal to the limit) the energy error shrinks at ``1/(N+1)^2``.
    """
    if n_max > 60:
        raise ValueError("n_max is limited to 60 on the float path")
    w = ctx.word(w)
    N = ctx.N
    lim = corner_limit(ctx, u, w, i)
    y = exact.to_numpy(project_P(ctx, apply_word(ctx, w, u)))
    target = float(lim.inner) / N * (exact.to_numpy(ctx.one) - exact.to_numpy(ctx.e(i)))
    target -= target.mean()
    t_i = ctx.T_float[i - 1]
    t_w = zero_mean_word_matrix(ctx, w)
    sc = float(ctx.scale)
    base = 2.0 * sc ** len(w) * (N + 1)
    energies, ratios, errs, kus = [], [], [], []
    x = y.copy()
    tw = t_w.copy()
    for n in range(n_max + 1):
        xs = sc ** n * x
        energies.append(base * float(xs @ xs))
        fro = float(np.sum(tw * tw))
        ratios.append(float(x @ x) / fro)
        kus.append(sc ** n * base * sc ** n * fro)
        errs.append(float(np.linalg.norm(xs - target)))
        x = t_i @ x
        tw = t_i @ tw
    e_lim = float(lim.energy_limit)
    e_errs = [abs(e - e_lim) for e in energies]
    lo, hi = fit_window
    hi = min(hi, n_max)
    v_rate = _fit_ratio(errs, lo, hi)
    e_rate = _fit_ratio(e_errs, lo, max(lo + 2, hi // 2))
    checks = [
        Check.of("rescaled energy limit", abs(energies[-1] - e_lim) < 1e-8, n=n_max),
        Check.of("ratio limit", abs(ratios[-1] - float(lim.value)) < 1e-8, n=n_max),
        Check.of("Theta bound", 0 < min(kus) <= max(kus) < float("inf")),
    ]
    return ConvergenceReport(energies, ratios, errs, e_lim, float(lim.value), v_rate, e_rate,
                             min(kus), max(kus), checks)


def onb_decomposition_check(ctx: HarmonicContext, basis, words, mode="exact", atol: float = 1e-10) -> list:
    """``sum_i nu_{h_{u_i}}(K_w) = nu(K_w)`` for an orthonormal basis ``u_1..u_{N+1}``."""
    use_float = _float_mode(mode)
    n = ctx.size
    if len(basis) != n:
        raise ValueError(f"basis needs {n} vectors")
    if use_float:
        b = np.array([[float(x) for x in v] for v in basis])
        if not np.allclose(b @ b.T, np.eye(n), atol=1e-12):
            raise ValueError("basis is not orthonormal")
    else:
        b = [exact.vec(v) for v in basis]
        if any(exact.inner(p, q) != int(a == c) for a, p in enumerate(b) for c, q in enumerate(b)):
            raise ValueError("basis is not orthonormal")
    out = []
    for w in words:
        total = sum(cell_energy(ctx, v, w, mode) for v in b)
        ref = kusuoka_cell(ctx, w, mode)
        ok = abs(total - ref) <= atol * max(1.0, abs(ref)) if use_float else total == ref
        out.append(Check.of("orthonormal decomposition", ok, word=str(ctx.word(w))))
    return out


# --- decay along symmetric tails -------------------------------------------

@dataclass
class TailReport:
    ratios: list  # exact cell ratios at w i j^n, n = 0..n_max
    energies: list  # exact nu_h(K_{w i j^n})
    slope: float  # fitted slope of log ratio
    predicted_slope: float
    energy_slope: float
    predicted_energy_slope: float
    window: tuple

    def rows(self) -> list:
        out = ["n,ratio,log_ratio"]
        for n, r in enumerate(self.ratios):
            lr = _log_fraction(Fraction(r)) if r > 0 else float("-inf")
            out.append(f"{n},{float(r):.17g},{lr:.17g}")
        return out


def _tail_ratios(ctx, u, a_start, j, n_max):
    """Exact (ratio, q0) along ``A_{j^n} a_start`` for n = 0..n_max."""
    a = a_start
    u = exact.vec(u)
    rat, energy_q = [], []
    for _ in range(n_max + 1):
        x = exact.mat_vec(a, u)
        qx = q0(ctx, x, x)
        rat.append(qx / _kusuoka_q(ctx, a))
        energy_q.append(qx)
        a = exact.mat_mul(ctx.a(j), a)
    return rat, energy_q


def symmetric_tail_ratio(ctx: HarmonicContext, u, w: WordLike, i: int, j: int, n_max: int = 30,
                         window: tuple = (10, 30)) -> TailReport:
    """Ratios along ``w i j^n`` for ``u`` with ``(A_w u)_i = (A_w u)_j``.

    The ratios are computed exactly: in floats the component that must
    vanish is swamped by rounding amplified at rate ``(N+1)^n``.
    """
    w = ctx.word(w)
    x = apply_word(ctx, w, u)
    if x[i - 1] != x[j - 1]:
        raise ValueError("boundary values at i and j differ on K_w; use find_vanishing_cell")
    a0 = word_matrix(ctx, w + (i,))
    rat, qs = _tail_ratios(ctx, u, a0, j, n_max)
    m0 = len(w) + 1
    energies = [2 * ctx.scale ** (m0 + n) * q for n, q in enumerate(qs)]
    lo, hi = window[0], min(window[1], n_max)
    n = np.arange(lo, hi + 1)

    def slope_of(seq):
        vals = [seq[k] for k in range(lo, hi + 1)]
        if any(v == 0 for v in vals):
            return float("-inf")
        logs = [_log_fraction(v) for v in vals]
        return float(np.polyfit(n, logs, 1)[0])

    N = ctx.N
    return TailReport(rat, energies, slope_of(rat), -2 * log(N + 1), slope_of(energies),
                      -log((N + 1) * (N + 3)), (lo, hi))


def _log_fraction(x: Fraction) -> float:
    # log of a tiny positive rational without underflow
    return log(x.numerator) - log(x.denominator)


# --- vanishing cells -------------------------------------------------------

@dataclass(frozen=True)
class VanishingWitness:
    word: Word  # w'' with cell_ratio(u, w w'') < eps
    ratio: Fraction
    case: str  # trivial | symmetric | step2-min | step2-max | tail
    s: Optional[Fraction] = None
    s_prime: Optional[Fraction] = None
    target: Optional[Fraction] = None  # dyadic location of the perturbed maximum
    ratio_bound: Optional[float] = None  # triangle bound for the ratio of h


class SearchExhausted(RuntimeError):
    def __init__(self, best_word, best_ratio):
        super().__init__(f"no witness within budget; best ratio {float(best_ratio):.3e} at {best_word}")
        self.best_word = best_word
        self.best_ratio = best_ratio


def _descend(ctx, u, a_start, j, eps, depth_cap):
    """First ``n <= depth_cap`` with ratio at ``A_{j^n} a_start`` below eps."""
    a = a_start
    u = exact.vec(u)
    best = None
    for n in range(depth_cap + 1):
        x = exact.mat_vec(a, u)
        r = q0(ctx, x, x) / _kusuoka_q(ctx, a)
        if best is None or r < best[1]:
            best = (n, r)
        if r < eps:
            return n, r, True
        a = exact.mat_mul(ctx.a(j), a)
    return best[0], best[1], False


def _dyadic_target(loc: float, level: int) -> Fraction:
    """Odd ``m / 2**level`` nearest ``loc``, kept strictly inside (1/2, 1)."""
    size = 1 << level
    m = int(round(loc * size))
    if m % 2 == 0:
        m += 1 if loc * size > m else -1
    m = max(size // 2 + 1, min(size - 1, m))
    return Fraction(m, size)


def find_vanishing_cell(ctx: HarmonicContext, u, w: WordLike = (), eps=Fraction(1, 1000),
                        depth_cap: int = 40, dyadic_cap: int = 20) -> VanishingWitness:
    """Word ``w''`` with ``nu_h(K_{w w''}) / nu(K_{w w''}) < eps``.

    Equal boundary values at ``p_i, p_j`` of a cell make the leading term of
    the ratio along ``i j^n`` vanish.  Otherwise the function is perturbed at
    a third vertex so that the maximum on an edge lands on a dyadic point;
    the perturbed function then has such a symmetric subcell, and for a fine
    enough dyadic target the original function's ratio there is small too.
    """
    w = ctx.word(w)
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    N = ctx.N
    u = exact.vec(u)
    x = apply_word(ctx, w, u)
    a_w = word_matrix(ctx, w)
    r0 = q0(ctx, x, x) / _kusuoka_q(ctx, a_w)
    if r0 < eps:
        return VanishingWitness(Word.empty(N), r0, "trivial")
    best = (Word.empty(N), r0)

    pairs = [(i, j) for i in ctx.symbols for j in ctx.symbols if i < j and x[i - 1] == x[j - 1]]
    if pairs:
        i, j = pairs[0]
        n, r, ok = _descend(ctx, u, exact.mat_mul(ctx.a(i), a_w), j, eps, depth_cap)
        word = Word((i,) + (j,) * n, N)
        if ok:
            return VanishingWitness(word, r, "symmetric")
        raise SearchExhausted(word, r)

    s = sum(x, Fraction(0)) / (N + 1)
    order = sorted(ctx.symbols, key=lambda k: x[k - 1])
    beta = [x[k - 1] for k in order]
    if beta[1] < s:
        case, sign, i, j = "step2-min", -1, order[0], order[1]
    elif s < beta[N - 1]:
        case, sign, i, j = "step2-max", 1, order[N], order[N - 1]
    else:
        # only possible for N = 2 with the middle value equal to the mean
        j = order[1]
        n, r, ok = _descend(ctx, u, a_w, j, eps, depth_cap)
        word = Word((j,) * n, N)
        if ok:
            return VanishingWitness(word, r, "tail", s=s)
        raise SearchExhausted(word, r)

    # work with g = -sign * h so that g has an interior maximum on p_i p_j
    g = tuple(-sign * v for v in x)
    gs = -sign * s
    b1, b2 = g[i - 1], g[j - 1]
    l = next(k for k in ctx.symbols if k not in (i, j))
    loc = float(derham.M_general(N, float(gs), float(b1), float(b2)))
    hat = exact.solve(a_w, ctx.e(l))  # boundary vector of the perturbation on K
    hat_norm = sqrt(float(exact.norm_sq(project_P(ctx, hat))))
    edge_word = lambda q, length: tuple(j if (q >> (length - 1 - b)) & 1 else i for b in range(length))

    for level in range(2, dyadic_cap + 1):
        target = _dyadic_target(loc, level)
        sigma = derham.M_inverse_exact(N, target)
        gs_p = b2 + (b2 - b1) * sigma
        g_p = tuple(v + (N + 1) * (gs_p - gs) if k == l else v for k, v in enumerate(g, start=1))
        m = target.numerator
        sub = edge_word((m - 1) // 2, level - 1)
        y = g_p
        for sym in sub:
            y = exact.mat_vec(ctx.a(sym), y)
        if y[i - 1] != y[j - 1]:
            raise ArithmeticError("perturbed function is not symmetric on the located subcell")
        a_sub = word_matrix(ctx, w + sub + (i,))
        n, r, ok = _descend(ctx, u, a_sub, j, eps, depth_cap)
        word = Word(sub + (i,) + (j,) * n, N)
        if r < best[1]:
            best = (word, r)
        if ok:
            delta = abs(gs_p - gs)
            u_prime = exact.add(u, exact.scale(-sign * (N + 1) * (gs_p - gs), hat))
            rp = float(cell_ratio(ctx, u_prime, w + word))
            bound = (sqrt(rp) + (N + 1) * float(delta) * hat_norm) ** 2
            return VanishingWitness(word, r, case, s=s, s_prime=-sign * gs_p, target=target,
                                    ratio_bound=bound)
    raise SearchExhausted(*best)


# --- level scans -----------------------------------------------------------

def _word_stack(ctx: HarmonicContext, length: int) -> np.ndarray:
    """``T_w P`` for every ``w`` of the given length, lexicographic order."""
    n = ctx.size
    stack = ctx.P_float[None, :, :]
    for _ in range(length):
        stack = np.einsum("sab,wbc->wsac", ctx.T_float, stack).reshape(-1, n, n)
    return stack


def _index_word(ctx: HarmonicContext, index: int, length: int) -> Word:
    n = ctx.size
    syms = []
    for _ in range(length):
        index, r = divmod(index, n)
        syms.append(r + 1)
    return Word(tuple(reversed(syms)), ctx.N)


@dataclass
class LevelScan:
    length: int
    min_ratio: np.ndarray  # one entry per boundary vector
    argmin: list  # words attaining the minimum
    max_ratio: np.ndarray


def level_scan(ctx: HarmonicContext, us, length: int, chunk: int = 16) -> LevelScan:
    """Min and max of the float cell ratio over all words of one length.

    Words are split as ``w1 w2``; ``T_{w1} P`` is applied to the boundary
    vectors once and each ``T_{w2}`` block multiplies a chunk of those in a
    single matrix product.
    """
    U = np.array([[float(c) for c in u] for u in us]).T  # (n, k)
    n, k = U.shape
    l1 = length // 2
    l2 = length - l1
    s1 = _word_stack(ctx, l1)
    s2 = _word_stack(ctx, l2)
    lhs = s2.reshape(-1, n)  # rows of T_{w2} P, grouped per w2
    rhs_all = np.concatenate([s1 @ U, s1], axis=2)  # (K1, n, k + n)
    width = k + n
    best = np.full(k, np.inf)
    best_idx = np.zeros(k, dtype=np.int64)
    worst = np.zeros(k)
    K2 = s2.shape[0]
    for start in range(0, s1.shape[0], chunk):
        block = rhs_all[start:start + chunk]
        c = block.shape[0]
        rhs = block.transpose(1, 0, 2).reshape(n, c * width)
        out = (lhs @ rhs).reshape(K2, n, c, width)
        sq = np.einsum("bncd,bncd->bcd", out, out)  # (K2, c, width)
        ratio = sq[:, :, :k] / sq[:, :, k:].sum(axis=2)[:, :, None]
        flat = ratio.reshape(-1, k)
        pos = flat.argmin(axis=0)
        vals = flat[pos, np.arange(k)]
        better = vals < best
        # flat index = b * c + a  ->  word index (start + a) * K2 + b
        b, a = np.divmod(pos, c)
        best_idx = np.where(better, (start + a) * K2 + b, best_idx)
        best = np.where(better, vals, best)
        worst = np.maximum(worst, flat.max(axis=0))
    words = [_index_word(ctx, int(ix), length) for ix in best_idx]
    return LevelScan(length, best, words, worst)


def ratio_rows(ctx: HarmonicContext, u, words, mode="exact") -> list:
    """CSV lines ``word,nu_h,nu,ratio``."""
    out = ["word,nu_h,nu,ratio"]
    for w in words:
        w = ctx.word(w)
        e = cell_energy(ctx, u, w, mode)
        k = kusuoka_cell(ctx, w, mode)
        cells = (exact.fmt(e), exact.fmt(k), exact.fmt(e / k)) if not _float_mode(mode) else \
            (f"{e:.17g}", f"{k:.17g}", f"{e / k:.17g}")
        out.append(",".join((str(w) or "-",) + cells))
    return out


def iter_word_matrices(ctx: HarmonicContext, max_len: int, alphabet=None):
    """``(w, A_w)`` for every word of length ``<= max_len``, shortest first."""
    alphabet = tuple(alphabet) if alphabet is not None else ctx.symbols
    level = [((), exact.identity(ctx.size))]
    for n in range(max_len + 1):
        for syms, a in level:
            yield Word(syms, ctx.N), a
        if n < max_len:
            level = [(syms + (s,), exact.mat_mul(ctx.a(s), a)) for syms, a in level for s in alphabet]


def kusuoka_from_matrix(ctx: HarmonicContext, a, length: int) -> Fraction:
    return 2 * ctx.scale ** length * _kusuoka_q(ctx, a)


def all_words(ctx: HarmonicContext, max_len: int):
    for m in range(max_len + 1):
        for syms in product(ctx.symbols, repeat=m):
            yield Word(syms, ctx.N)
