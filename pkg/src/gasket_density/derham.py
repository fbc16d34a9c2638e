"""Edge restrictions of harmonic functions and the maximum-location map.

On an edge ``p_i p_j`` (identified with ``[0, 1]``) a harmonic function is
determined by three numbers: the endpoint values ``a_i``, ``a_j`` and the
mean ``s`` of all boundary values.  When ``a_i != a_j`` the maximum is
attained at a unique point ``M(s; a_i, a_j)``.  The normalized profile
``M(s) = M(s; -1, 0)`` is written as ``L o phi^{-1}`` where ``L`` solves a
two-branch de Rham functional equation; ``L`` is evaluated here three ways:
pointwise contraction (``L_eval``), symbolic itinerary plus coding map
(``itinerary_eval``) and a grid iteration of the contraction
(``derham_grid``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

HALF = Fraction(1, 2)
DEFAULT_ITER = 40


def _dim(N) -> int:
    N = getattr(N, "N", N)
    if not isinstance(N, int) or N < 2:
        raise ValueError(f"dimension N must be an integer >= 2, got {N!r}")
    return N


# --- edge shapes -----------------------------------------------------------

@dataclass(frozen=True)
class EdgeShape:
    kind: str  # strictly-increasing | strictly-decreasing | interior-max | interior-min | constant
    location: Optional[float] = None  # extremum position in [0, 1] for interior kinds
    exact_location: Optional[Fraction] = None  # set when the position is exactly known


def classify_edge(N, a_i, a_j, s, n_iter: int = DEFAULT_ITER) -> EdgeShape:
    """Shape of the harmonic function on ``p_i p_j`` from ``(a_i, a_j, s)``."""
    N = _dim(N)
    if a_i == a_j:
        if s == a_i:
            return EdgeShape("constant")
        kind = "interior-max" if s > a_i else "interior-min"
        return EdgeShape(kind, 0.5, HALF)
    if a_i < a_j:
        if a_i <= s <= a_j:
            return EdgeShape("strictly-increasing")
        if s > a_j:
            return EdgeShape("interior-max", M_general(N, s, a_i, a_j, n_iter))
        return EdgeShape("interior-min", M_general(N, -s, -a_i, -a_j, n_iter))
    if a_j <= s <= a_i:
        return EdgeShape("strictly-decreasing")
    if s > a_i:
        return EdgeShape("interior-max", M_general(N, s, a_i, a_j, n_iter))
    return EdgeShape("interior-min", M_general(N, -s, -a_i, -a_j, n_iter))


def edge_values(N, a_i, a_j, s, depth: int, mode: str = "exact"):
    """Values at ``m / 2**depth``, ``m = 0..2**depth``.

    Each subsegment carries (left value, right value, cell mean); a midpoint
    value and the two child means follow from the parent triple alone.
    """
    N = _dim(N)
    c = N + 3
    if mode == "float":
        left = np.array([float(a_i)])
        right = np.array([float(a_j)])
        mean = np.array([float(s)])
        for _ in range(depth):
            mid = ((N + 1) * mean + left + right) / c
            m_left = ((N + 1) * mean + 2 * left) / c
            m_right = ((N + 1) * mean + 2 * right) / c
            left = np.stack([left, mid], axis=1).ravel()
            right = np.stack([mid, right], axis=1).ravel()
            mean = np.stack([m_left, m_right], axis=1).ravel()
        return np.append(left, right[-1])
    segs = [(Fraction(a_i), Fraction(a_j), Fraction(s))]
    for _ in range(depth):
        nxt = []
        for lv, rv, mv in segs:
            mid = ((N + 1) * mv + lv + rv) / c
            nxt.append((lv, mid, ((N + 1) * mv + 2 * lv) / c))
            nxt.append((mid, rv, ((N + 1) * mv + 2 * rv) / c))
        segs = nxt
    return [seg[0] for seg in segs] + [segs[-1][1]]


def brute_max_location(N, a_i, a_j, s, depth: int = 16) -> Fraction:
    """Grid argmax of the edge restriction; ties go to the smaller ``t``."""
    if a_i == a_j:
        raise ValueError("equal endpoint values: the extremum is exactly at t = 1/2")
    vals = edge_values(N, a_i, a_j, s, depth, mode="float")
    return Fraction(int(np.argmax(vals)), 1 << depth)


# --- the functional equation for L -----------------------------------------

def g1(N, t):
    return (1 - 2 * t) / ((N - 1) * t + 1)


def g2(N, t):
    return (2 * t - 1) / ((N - 1) * (1 - t) + 1)


def g1_inv(N, s):
    return (1 - s) / ((N - 1) * s + 2)


def g2_inv(N, s):
    return (N * s + 1) / ((N - 1) * s + 2)


def f1(y):
    return 1 - y / 2


def f2(y):
    return (1 + y) / 2


def G(N, t):
    return g1(N, t) if t <= HALF else g2(N, t)


def default_start(t):
    """Affine start ``(1 + t)/2`` matching ``L(0) = 1/2`` and ``L(1) = 1``."""
    return (1 + t) / 2


def identity_start(t):
    return t


def L_eval(N, t, n_iter: int = DEFAULT_ITER, start=default_start):
    """``(Xi^n F_0)(t)``, the ``n``-fold contraction applied to ``F_0 = start``.

    Accepts a float, an array of floats or a Fraction (evaluated exactly).
    The distance to ``L`` is at most ``2**(1-n) * ||F_0 - Xi F_0||``.
    """
    N = _dim(N)
    if isinstance(t, Fraction):
        branches = []
        x = t
        for _ in range(n_iter):
            b = x <= HALF
            branches.append(b)
            x = g1(N, x) if b else g2(N, x)
        y = Fraction(start(x))
        for b in reversed(branches):
            y = f1(y) if b else f2(y)
        return y
    x = np.asarray(t, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).copy()
    branches = []
    for _ in range(n_iter):
        b = x <= 0.5
        branches.append(b)
        x = np.where(b, g1(N, x), g2(N, x))
    y = np.asarray(start(x), dtype=float)
    for b in reversed(branches):
        y = np.where(b, 1.0 - 0.5 * y, 0.5 + 0.5 * y)
    return float(y[0]) if scalar else y


def L_rhs(N, t, L):
    """Right-hand side of the functional equation with ``L`` a callable."""
    t = np.asarray(t, dtype=float)
    lo = t <= 0.5
    out = np.empty_like(t)
    out[lo] = 1.0 - 0.5 * L(g1(N, t[lo]))
    out[~lo] = 0.5 + 0.5 * L(g2(N, t[~lo]))
    return out


def start_defect(N, start=default_start, points: int = 4097) -> float:
    """``||F_0 - Xi F_0||`` estimated on a grid (plus the branch point from both sides)."""
    t = np.linspace(0.0, 1.0, points)
    f0 = np.asarray(start(t), dtype=float)
    xi = L_rhs(N, t, lambda x: np.asarray(start(x), dtype=float))
    right_at_half = 0.5 + 0.5 * float(start(0.0))
    return float(max(np.max(np.abs(f0 - xi)), abs(float(start(0.5)) - right_at_half)))


def L_error_bound(N, n_iter: int, start=default_start) -> float:
    return 2.0 ** (1 - n_iter) * start_defect(N, start)


@dataclass
class DeRhamState:
    """Grid iterate of the contraction on ``m / 2**depth``."""

    grid: np.ndarray
    values: np.ndarray
    iterations: int
    contraction_bound: float
    interpolation_gap: float  # max deviation from pointwise L_eval on the grid
    monotone: bool


def derham_grid(N, sweeps: int = 40, depth: int = 12, start=default_start) -> DeRhamState:
    """Iterate the contraction on a dyadic grid, interpolating linearly off-grid.

    Nondecreasing iterates stay nondecreasing; this is asserted every sweep.
    """
    N = _dim(N)
    grid = np.linspace(0.0, 1.0, (1 << depth) + 1)
    vals = np.asarray(start(grid), dtype=float)
    monotone = True
    for _ in range(sweeps):
        vals = L_rhs(N, grid, lambda x: np.interp(x, grid, vals))
        monotone &= bool(np.all(np.diff(vals) >= -1e-15))
        if not monotone:
            raise ArithmeticError("contraction iterate lost monotonicity")
    reference = L_eval(N, grid, DEFAULT_ITER)
    gap = float(np.max(np.abs(vals - reference)))
    return DeRhamState(grid, vals, sweeps, L_error_bound(N, sweeps, start), gap, monotone)


# --- itinerary and coding map ----------------------------------------------

@dataclass(frozen=True)
class Itinerary:
    """Symbols ``omega_0 omega_1 ...``; ``tail_two`` means ``2^inf`` follows ``prefix``."""

    prefix: tuple
    tail_two: bool
    half_hit: Optional[int] = None  # k with G^k(t) == 1/2, if any

    def symbols(self, n: int) -> tuple:
        if n <= len(self.prefix):
            return self.prefix[:n]
        if not self.tail_two:
            raise ValueError("itinerary was truncated before n symbols")
        return self.prefix + (2,) * (n - len(self.prefix))


def coding(word: Sequence[int], tail=Fraction(1)) -> Fraction:
    """``f_{w_0} o ... o f_{w_{n-1}}(tail)``; with ``tail = 1`` this is ``chi(w 2^inf)``."""
    y = Fraction(tail)
    for s in reversed(tuple(word)):
        y = f1(y) if s == 1 else f2(y)
    return y


def itinerary_eval(N, t, max_steps: int = 60) -> tuple[Itinerary, Fraction]:
    """Exact itinerary of rational ``t`` under ``G`` and ``chi`` of it.

    A hit of ``1/2`` forces the tail ``1 1 2^inf``; a hit of ``1`` (or ``0``)
    gives ``2^inf`` (or ``1 2^inf``).  Without a hit the coding is truncated
    after ``max_steps`` symbols, with error at most ``2**-max_steps / 4``.
    """
    N = _dim(N)
    if isinstance(t, float):
        raise TypeError("itinerary_eval needs an exact rational; use L_eval for floats")
    x = Fraction(t)
    if not 0 <= x <= 1:
        raise ValueError("t must lie in [0, 1]")
    prefix = []
    hit = None
    for k in range(max_steps):
        if x == 1:
            return Itinerary(tuple(prefix), True, hit), coding(prefix)
        if x == HALF and hit is None:
            hit = k
        prefix.append(1 if x <= HALF else 2)
        x = G(N, x)
    return Itinerary(tuple(prefix), False, hit), coding(prefix, Fraction(3, 4))


def L_inverse_dyadic(N, y) -> Fraction:
    """Exact ``L^{-1}(y)`` for dyadic ``y`` in ``[1/2, 1]``.

    The coding of a dyadic ``y`` ends in ``2^inf``; pulling it back through
    the inverse branches ``g_k^{-1}`` gives a rational preimage.
    """
    N = _dim(N)
    y = Fraction(y)
    if not HALF <= y <= 1 or y.denominator & (y.denominator - 1):
        raise ValueError("y must be a dyadic rational in [1/2, 1]")
    word = []
    while y != 1:
        if y <= Fraction(3, 4):
            word.append(1)
            y = 2 - 2 * y
        else:
            word.append(2)
            y = 2 * y - 1
    t = Fraction(1)
    for s in reversed(word):
        t = g1_inv(N, t) if s == 1 else g2_inv(N, t)
    return t


def inverse_branch_derivative(N, k: int, l: int, s):
    """Closed-form ``|d/ds (g_k^{-1} o g_l^{-1})(s)|`` (independent of ``k``)."""
    del k
    if l == 1:
        return Fraction(N + 1) ** 2 / (N + 3 + (N - 1) * Fraction(s)) ** 2
    return Fraction(N + 1) ** 2 / (N + 3 + (N * N + N - 2) * Fraction(s)) ** 2


def _single_derivative(N, s):
    return Fraction(N + 1) / ((N - 1) * Fraction(s) + 2) ** 2


def inverse_branch_contraction_check(N, samples: int = 64):
    """Checks the two-step contraction of the inverse branches.

    Returns a list of (name, ok) pairs: endpoint values, chain-rule agreement
    of the closed forms on rational samples, the supremum bound
    ``((N+1)/(N+3))**2`` and a central finite-difference comparison.
    """
    N = _dim(N)
    out = []
    ends = (g1_inv(N, Fraction(0)), g1_inv(N, Fraction(1)), g2_inv(N, Fraction(0)), g2_inv(N, Fraction(1)))
    out.append(("inverse branch endpoints", ends == (HALF, 0, HALF, 1)))
    bound = Fraction(N + 1, N + 3) ** 2
    chain_ok = sup_ok = fd_ok = True
    h = 1e-6
    inv = {1: g1_inv, 2: g2_inv}
    for q in range(samples + 1):
        s = Fraction(q, samples)
        for k in (1, 2):
            for l in (1, 2):
                closed = inverse_branch_derivative(N, k, l, s)
                y = inv[l](N, s)
                chain = _single_derivative(N, y) * _single_derivative(N, s)
                chain_ok &= closed == chain
                sup_ok &= closed <= bound
                if 0 < q < samples:
                    sf = float(s)
                    fd = (inv[k](N, inv[l](N, sf + h)) - inv[k](N, inv[l](N, sf - h))) / (2 * h)
                    fd_ok &= abs(abs(fd) - float(closed)) < 1e-8
    out.append(("chain rule matches closed forms", chain_ok))
    out.append(("sup derivative <= ((N+1)/(N+3))^2", sup_ok and inverse_branch_derivative(N, 1, 1, 0) == bound))
    out.append(("finite differences match", fd_ok))
    return out


# --- the maximum-location map ----------------------------------------------

def phi(N, t):
    return (1 - t) / ((N + 1) * t)


def phi_inv(N, s):
    return 1 / ((N + 1) * s + 1)


def M_eval(N, s, n_iter: int = DEFAULT_ITER):
    """Position of the maximum on ``[0, 1]`` for endpoint values ``-1, 0`` and mean ``s``."""
    N = _dim(N)
    if s <= 0:
        return Fraction(1) if isinstance(s, Fraction) else 1.0
    return L_eval(N, phi_inv(N, s), n_iter)


def M_general(N, s, a_i, a_j, n_iter: int = DEFAULT_ITER):
    if a_i == a_j:
        raise ValueError("M(s; a_i, a_j) needs a_i != a_j")
    if a_i < a_j:
        return M_eval(N, (s - a_j) / (a_j - a_i), n_iter)
    return 1 - M_eval(N, (s - a_i) / (a_i - a_j), n_iter)


def M_inverse(N, target, tol: float = 2.0 ** -24, n_iter: int = DEFAULT_ITER,
              max_steps: int = 400) -> float:
    """Bisection for ``s`` with ``M(s) = target``; stops when the M-bracket is below ``tol``."""
    N = _dim(N)
    target = float(target)
    if not 0.5 < target < 1.0:
        raise ValueError("target must lie strictly inside (1/2, 1)")
    pivot = 1.0 / (N + 1)
    if target == 0.75:
        return pivot
    if target > 0.75:
        lo, hi = 0.0, pivot
    else:
        lo, hi = pivot, 2.0 * pivot
        while M_eval(N, hi, n_iter) >= target:
            lo, hi = hi, 2.0 * hi
    m_lo, m_hi = (1.0 if lo == 0.0 else M_eval(N, lo, n_iter)), M_eval(N, hi, n_iter)
    for _ in range(max_steps):
        if m_lo - m_hi < tol:
            break
        mid = 0.5 * (lo + hi)
        m_mid = M_eval(N, mid, n_iter)
        if m_mid >= target:
            lo, m_lo = mid, m_mid
        else:
            hi, m_hi = mid, m_mid
    return 0.5 * (lo + hi)


def M_inverse_exact(N, target) -> Fraction:
    """Exact ``s`` with ``M(s) = target`` for a dyadic target in ``(1/2, 1)``."""
    target = Fraction(target)
    if not HALF < target < 1:
        raise ValueError("target must lie strictly inside (1/2, 1)")
    return phi(_dim(N), L_inverse_dyadic(N, target))


def maxloc_rows(N, s_values, n_iter: int = DEFAULT_ITER):
    return [(float(s), float(M_eval(N, s, n_iter))) for s in s_values]
