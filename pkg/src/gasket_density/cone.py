"""Invariant cones for ``T_k = P A_k P`` and densities along arbitrary edge points.

For ``N = 2, 3`` and a pair ``{i, j}`` there is a simplicial cone in the
zero-mean subspace mapped strictly inside itself by ``T_i`` and ``T_j``.  In
generator coordinates ``T_k G = G C_k`` with ``C_k`` entrywise positive, so
forward products contract the Hilbert projective metric.  The normalized
row functionals ``f C_{w_n} ... C_{w_1}`` converge to a limit ``rho`` that
determines the density at the edge point coded by ``w_1 w_2 ...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import exp, inf, log, tanh
from typing import Optional

import numpy as np

from . import exact
from .address import EdgeAddress, SymbolStream, Word
from .harmonic import HarmonicContext, apply_word, word_matrix
from .report import Check

# generators of the cone for the pair (1, 2)
CONE_GENERATORS = {
    2: ((1, -3, 2), (3, -1, -2)),
    3: ((-7, 2, 2, 3), (-1, 4, -2, -1), (-3, 3, 4, -4)),
}

# generator coordinates of T_k a_l for the pair (1, 2), keyed by (k, l)
CONE_TABLES = {
    2: {
        (1, 1): (Fraction(9, 40), Fraction(5, 40)),
        (1, 2): (Fraction(3, 40), Fraction(23, 40)),
        (2, 1): (Fraction(23, 40), Fraction(3, 40)),
        (2, 2): (Fraction(5, 40), Fraction(9, 40)),
    },
    3: {
        (1, 1): tuple(Fraction(x, 696) for x in (445, 7, 42)),
        (1, 2): tuple(Fraction(x, 696) for x in (47, 117, 6)),
        (1, 3): tuple(Fraction(x, 696) for x in (141, 3, 134)),
        (2, 1): tuple(Fraction(x, 696) for x in (118, 158, 20)),
        (2, 2): tuple(Fraction(x, 696) for x in (4, 432, 40)),
        (2, 3): tuple(Fraction(x, 696) for x in (3, 237, 146)),
    },
}


class UnsupportedDimension(ValueError):
    """Invariant cones are only available for N = 2 and 3."""


def build_Tk(ctx: HarmonicContext, k: int):
    n = ctx.size
    p = tuple(tuple(Fraction(int(r == c)) - Fraction(1, n) for c in range(n)) for r in range(n))
    return exact.mat_mul(exact.mat_mul(p, ctx.a(k)), p)


@dataclass(frozen=True)
class ConeFrame:
    N: int
    i: int
    j: int
    generators: tuple  # exact zero-mean vectors a_1..a_N
    C: dict  # k -> exact N x N matrix with T_k G = G C_k
    G_float: np.ndarray
    C_float: dict

    def coords(self, x):
        """Generator coordinates of a zero-mean vector (exact for exact input)."""
        if isinstance(x, np.ndarray):
            sol, *_ = np.linalg.lstsq(self.G_float, x, rcond=None)
            return sol
        return exact.lstsq_coords(self.generators, x)

    @property
    def anchor(self):
        """``z = a_1 + ... + a_N``."""
        return tuple(sum(col) for col in zip(*self.generators))

    def interior_basis(self) -> list:
        """``u_1 = z`` and ``u_l = z + a_l`` for ``l >= 2``."""
        z = self.anchor
        return [z] + [exact.add(z, a) for a in self.generators[1:]]

    def invariant(self) -> bool:
        return all(x > 0 for c in self.C.values() for row in c for x in row)


def _perm_for(N: int, i: int, j: int) -> list:
    rest = [k for k in range(N + 1) if k not in (i - 1, j - 1)]
    return [i - 1, j - 1] + rest  # 0-based image of 0, 1, 2, ...


def paper_cone(ctx: HarmonicContext, i: int = 1, j: int = 2) -> ConeFrame:
    """Cone frame for the pair ``(i, j)``, conjugated from the ``(1, 2)`` cone."""
    N = ctx.N
    if N not in CONE_GENERATORS:
        raise UnsupportedDimension(f"no invariant cone available for N = {N}")
    if i == j:
        raise ValueError("i and j must differ")
    perm = _perm_for(N, i, j)
    gens = tuple(exact.permute_vector(exact.vec(a), perm) for a in CONE_GENERATORS[N])
    C = {}
    for k in (i, j):
        t = build_Tk(ctx, k)
        cols = [exact.lstsq_coords(gens, exact.mat_vec(t, a)) for a in gens]
        C[k] = exact.transpose(tuple(cols))
    G = np.array([[float(x) for x in a] for a in gens]).T
    frame = ConeFrame(N, i, j, gens, C, G, {k: exact.to_numpy(c) for k, c in C.items()})
    if not frame.invariant():
        raise ArithmeticError(f"cone for ({i}, {j}) is not strictly invariant")
    return frame


def table_check(ctx: HarmonicContext) -> list:
    """Generator coordinates of ``T_k a_l`` against the tabulated rationals."""
    frame = paper_cone(ctx, 1, 2)
    out = []
    for (k, l), expected in CONE_TABLES[ctx.N].items():
        got = tuple(row[l - 1] for row in frame.C[k])
        out.append(Check.of("T_k a_l expansion", got == expected, N=ctx.N, k=k, l=l,
                            value="(" + ", ".join(exact.fmt(x) for x in got) + ")"))
    return out


# --- Hilbert metric --------------------------------------------------------

def _coords_in_cone(frame: ConeFrame, x) -> np.ndarray:
    if isinstance(x, np.ndarray) and x.shape == (frame.N,):
        c = x
    else:
        c = frame.coords(x if isinstance(x, np.ndarray) else exact.vec(x))
    c = np.array([float(v) for v in c])
    if np.any(c < -1e-12):
        raise ValueError("argument lies outside the cone")
    return np.clip(c, 0.0, None)


def hilbert_metric_coords(x: np.ndarray, y: np.ndarray) -> float:
    """Hilbert metric between nonnegative coordinate vectors of a simplicial cone."""
    zx, zy = x == 0, y == 0
    if np.any(zx != zy):
        return inf
    keep = ~zx
    if not keep.any():
        return 0.0
    r = x[keep] / y[keep]
    return float(log(r.max()) - log(r.min()))


def hilbert_metric(frame: ConeFrame, x, y) -> float:
    """``d_H(x, y)`` for zero-mean vectors (or coordinate arrays) in the closed cone."""
    return hilbert_metric_coords(_coords_in_cone(frame, x), _coords_in_cone(frame, y))


def _diameter(vectors) -> float:
    return max(hilbert_metric_coords(a, b) for a in vectors for b in vectors)


@dataclass
class ContractionEstimate:
    diam: dict  # k -> Hilbert diameter of the image of the cone under T_k
    tau: dict  # k -> tanh(diam / 4)
    joint: float
    empirical: dict  # k -> max observed d(T x, T y) / d(x, y)
    dual_diam: dict  # same for the row action on the dual orthant
    dual_tau: dict
    dual_joint: float
    dual_spread: float  # max Hilbert distance among all rows of the C_k

    @property
    def lipschitz(self) -> float:
        """``(e^D - 1)/D``: sup-norm per unit Hilbert distance on the normalized slice."""
        D = self.dual_spread
        return (exp(D) - 1) / D if D > 0 else 1.0


def contraction_estimate(ctx: HarmonicContext, frame: ConeFrame, samples: int = 1000,
                         seed: int = 0) -> ContractionEstimate:
    rng = np.random.default_rng(seed)
    diam, tau, emp, ddiam, dtau = {}, {}, {}, {}, {}
    for k, c in frame.C_float.items():
        cols = [c[:, l] for l in range(frame.N)]
        rows = [c[l, :] for l in range(frame.N)]
        diam[k] = _diameter(cols)
        tau[k] = tanh(diam[k] / 4)
        ddiam[k] = _diameter(rows)
        dtau[k] = tanh(ddiam[k] / 4)
        worst = 0.0
        for _ in range(samples):
            x = rng.exponential(size=frame.N)
            y = rng.exponential(size=frame.N)
            d0 = hilbert_metric_coords(x, y)
            if d0 > 1e-9:
                worst = max(worst, hilbert_metric_coords(c @ x, c @ y) / d0)
        emp[k] = worst
    all_rows = [c[l, :] for c in frame.C_float.values() for l in range(frame.N)]
    return ContractionEstimate(diam, tau, max(tau.values()), emp, ddiam, dtau, max(dtau.values()),
                               _diameter(all_rows))


# --- dual iteration --------------------------------------------------------

@dataclass
class DualState:
    rho: np.ndarray  # limit functional in generator coordinates, entries sum to 1
    iterations: int
    last_step: float  # sup-norm of the last successive difference
    steps: list  # successive differences
    bounds: list  # analytic bounds L* tau*^(n-1) D for the same steps
    certified: bool  # every observed step was below its analytic bound


def _normalize(row: np.ndarray) -> np.ndarray:
    return row / row.sum()


def _check_stream(frame: ConeFrame, omega: SymbolStream, n: int):
    for k in range(n):
        if omega.symbol(k) not in (frame.i, frame.j):
            raise ValueError(f"symbol {omega.symbol(k)} is not one of {frame.i}, {frame.j}")


def rho_limit(ctx: HarmonicContext, frame: ConeFrame, omega: SymbolStream, tol: float = 1e-10,
              start: Optional[np.ndarray] = None, max_iter: int = 5000,
              estimate: Optional[ContractionEstimate] = None) -> DualState:
    """Limit of ``psi_n = normalize(f C_{w_n} ... C_{w_1})`` for ``omega = w_1 w_2 ...``.

    Stops when both the observed step and the geometric bound fall below
    ``tol``.
    """
    est = estimate or contraction_estimate(ctx, frame, samples=0)
    t_star, D, lip = est.dual_joint, est.dual_spread, est.lipschitz
    f = np.ones(frame.N) if start is None else np.asarray(start, dtype=float)
    if np.any(f <= 0):
        raise ValueError("start functional must be strictly positive")
    M = np.eye(frame.N)
    prev = _normalize(f)
    steps, bounds = [], []
    n = 0
    while True:
        n += 1
        if n > max_iter:
            raise RuntimeError("dual iteration did not converge within max_iter")
        k = omega.symbol(n - 1)
        if k not in frame.C_float:
            raise ValueError(f"symbol {k} is not one of {frame.i}, {frame.j}")
        M = frame.C_float[k] @ M
        M /= M.max()
        cur = _normalize(f @ M)
        step = float(np.max(np.abs(cur - prev)))
        steps.append(step)
        bounds.append(lip * t_star ** max(n - 2, 0) * D)
        prev = cur
        if n >= 2 and step < tol and bounds[-1] < tol:
            break
    ok = all(s <= b * (1 + 1e-9) + 1e-15 for s, b in zip(steps[1:], bounds[1:]))
    return DualState(prev, n, steps[-1], steps, bounds, ok)


def rho_exact_tail(ctx: HarmonicContext, frame: ConeFrame, prefix: Word, k: int) -> np.ndarray:
    """``rho`` for ``prefix k^inf``: proportional to ``x -> (d_k, A_prefix x)``."""
    dk = ctx.d[k - 1]
    row = np.array([float(exact.inner(dk, apply_word(ctx, prefix, a))) for a in frame.generators])
    return _normalize(row)


@dataclass
class EdgeDensityLimit:
    value: float
    alpha: np.ndarray  # coordinates of P A_w u in the interior basis
    beta: np.ndarray  # row k: coordinates of P A_w e_k
    lambdas: np.ndarray  # rho(u_l) / rho(u_1)
    dual: DualState


def _interior_coords(frame: ConeFrame, x: np.ndarray) -> np.ndarray:
    basis = np.array([[float(v) for v in b] for b in frame.interior_basis()]).T
    sol, *_ = np.linalg.lstsq(basis, x, rcond=None)
    return sol


def density_along(ctx: HarmonicContext, frame: Optional[ConeFrame], edge: EdgeAddress, u,
                  omega: SymbolStream, tol: float = 1e-10,
                  estimate: Optional[ContractionEstimate] = None) -> EdgeDensityLimit:
    """Density at the point of ``psi_w(p_i p_j)`` coded by ``omega``."""
    if frame is None:
        frame = paper_cone(ctx, edge.i, edge.j)
    if (frame.i, frame.j) != (edge.i, edge.j) and (frame.j, frame.i) != (edge.i, edge.j):
        raise ValueError("cone frame and edge use different vertex pairs")
    dual = rho_limit(ctx, frame, omega, tol, estimate=estimate)
    a_w = word_matrix(ctx, edge.prefix, "float")
    P = ctx.P_float
    basis = np.array([[float(v) for v in b] for b in frame.interior_basis()])  # rows u_l
    rho_vals = np.array([dual.rho @ frame.coords(b) for b in basis])
    lambdas = rho_vals / rho_vals[0]
    alpha = _interior_coords(frame, P @ a_w @ np.array([float(x) for x in u]))
    beta = np.array([_interior_coords(frame, P @ a_w[:, k]) for k in range(ctx.size)])
    num = float(alpha @ lambdas) ** 2
    den = float(np.sum((beta @ lambdas) ** 2))
    return EdgeDensityLimit(num / den, alpha, beta, lambdas, dual)


@dataclass
class ContinuityReport:
    gaps: list  # gap at agreement length m (max over sampled prefixes)
    rate: float  # fitted geometric rate
    tau_dual: float
    quotient_errors: list  # |density(v i j^inf) - density(v j i^inf)|
    checks: list


def continuity_modulus(ctx: HarmonicContext, frame: ConeFrame, edge: EdgeAddress, u, m_max: int = 20,
                       prefixes: int = 4, seed: int = 0, tol: float = 1e-12) -> ContinuityReport:
    """Gaps between streams that agree on ``m`` symbols and differ ever after."""
    rng = np.random.default_rng(seed)
    N = ctx.N
    i, j = edge.i, edge.j
    est = contraction_estimate(ctx, frame, samples=0)

    def dens(head, tail):
        om = SymbolStream.eventually(Word(head, N), tail, N)
        return density_along(ctx, frame, edge, u, om, tol, est).value

    gaps, qerr = [], []
    for m in range(m_max + 1):
        worst = 0.0
        for _ in range(prefixes):
            head = tuple(int(s) for s in rng.choice([i, j], size=m))
            worst = max(worst, abs(dens(head, i) - dens(head, j)))
            qerr.append(abs(dens(head + (i,), j) - dens(head + (j,), i)))
        gaps.append(worst)
    ms = np.arange(m_max + 1)
    g = np.array(gaps)
    keep = g > 1e-13
    rate = float(np.exp(np.polyfit(ms[keep], np.log(g[keep]), 1)[0])) if keep.sum() >= 2 else 0.0
    checks = [
        Check.of("gaps bounded", np.isfinite(g).all()),
        Check.of("geometric decay", rate < 1, rate=f"{rate:.4f}"),
        Check.of("decay within dual contraction", rate <= est.dual_joint + 0.05,
                 rate=f"{rate:.4f}", tau=f"{est.dual_joint:.4f}"),
        Check.of("quotient pairs agree", max(qerr) < 1e-9, worst=f"{max(qerr):.2e}"),
    ]
    return ContinuityReport(gaps, rate, est.dual_joint, qerr, checks)
