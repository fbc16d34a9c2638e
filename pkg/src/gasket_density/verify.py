"""Exact identity suite for one gasket dimension."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

from . import cone, derham, edge, energy, exact
from .harmonic import HarmonicContext, build_context, corrupted_context, dual_vector_checks, \
    eigen_check, permutation_check
from .report import Check


def householder_basis(v) -> list:
    """Rows of ``I - 2 v tv / |v|^2``: an exactly orthonormal rational basis."""
    v = exact.vec(v)
    n = len(v)
    nv = exact.norm_sq(v)
    return [tuple(Fraction(int(r == c)) - 2 * v[r] * v[c] / nv for c in range(n)) for r in range(n)]


def _guard(name: str, fn, **params) -> list:
    # a broken context may raise deep inside a check; report that as a failure
    try:
        return list(fn())
    except (ArithmeticError, ValueError) as exc:
        return [Check(name, "FAIL", params, f"raised {type(exc).__name__}: {exc}")]


def _random_u(rng: random.Random, n: int):
    return tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(n))


def _det_checks(ctx: HarmonicContext, rng: random.Random, n_max: int):
    out = []
    for i, j in ((1, 2), (ctx.N, ctx.N + 1)):
        u = _random_u(rng, ctx.size)
        w = tuple(rng.choice(ctx.symbols) for _ in range(2))
        ok = all(edge.det_identity_check(ctx, u, w, w2, k, i, j)
                 for n in range(n_max + 1) for w2 in product((i, j), repeat=n) for k in ctx.symbols)
        out.append(Check.of("determinant contraction identity", ok, N=ctx.N, i=i, j=j, n_max=n_max))
    return out


def _dual_floor_checks(ctx: HarmonicContext, n_max: int):
    ok = all(edge.dual_norm_lower_bound_check(ctx, w2, l, 1, 2)
             for n in range(n_max + 1) for w2 in product((1, 2), repeat=n) for l in (1, 2))
    return [Check.of("dual norm lower bound", ok, N=ctx.N, n_max=n_max)]


def _psd_checks(ctx: HarmonicContext, rng: random.Random):
    out = []
    for k in ctx.symbols:
        samples = [(tuple(rng.choice(ctx.symbols) for _ in range(2)),
                    tuple(rng.choice(ctx.symbols) for _ in range(3)), rng.choice(ctx.symbols))]
        out.extend(edge.psd_floor_check(ctx, k, samples))
    return out


def _measure_checks(ctx: HarmonicContext, rng: random.Random, depth: int):
    out = []
    words = [w for m in range(depth + 1) for w in product(ctx.symbols, repeat=m)]
    add_ok = all(energy.kusuoka_cell(ctx, w) == sum(energy.kusuoka_cell(ctx, w + (k,)) for k in ctx.symbols)
                 for w in words[: 1 + ctx.size])
    out.append(Check.of("Kusuoka additivity", add_ok, N=ctx.N))
    basis = householder_basis([rng.randint(1, 5) for _ in range(ctx.size)])
    out.extend(energy.onb_decomposition_check(ctx, basis, words[:6]))
    return out


def _cone_checks(ctx: HarmonicContext):
    if ctx.N not in cone.CONE_GENERATORS:
        return [Check("cone tables and invariance", "SKIPPED", {"N": ctx.N}, "no invariant cone for this N")]
    out = cone.table_check(ctx)
    for i, j in ((1, 2), (2, 3), (3, 1)):
        out.append(Check.of("cone invariance", cone.paper_cone(ctx, i, j).invariant(), N=ctx.N, i=i, j=j))
    return out


def run_suite(N: int, corrupt: bool = False, seed: int = 0) -> list:
    """All identity checks for dimension ``N``.

    With ``corrupt`` one entry of ``A_1`` is perturbed first; the suite must
    then report failures.
    """
    rng = random.Random(seed)
    ctx = build_context(N)
    if corrupt:
        ctx = corrupted_context(ctx)
    checks = []
    checks += _guard("eigen relations", lambda: eigen_check(ctx), N=N)
    checks += _guard("permutation symmetry", lambda: permutation_check(ctx), N=N)
    checks += _guard("dual vector relations", lambda: dual_vector_checks(ctx), N=N)
    checks += _guard("floor matrix minors", lambda: _psd_checks(ctx, rng), N=N)
    checks += _guard("determinant identity", lambda: _det_checks(ctx, rng, 4 if N <= 3 else 2), N=N)
    checks += _guard("dual norm floor", lambda: _dual_floor_checks(ctx, 6 if N <= 3 else 3), N=N)
    checks += _guard("measure identities", lambda: _measure_checks(ctx, rng, 2), N=N)
    checks += [Check.of(name, ok, N=N) for name, ok in derham.inverse_branch_contraction_check(N)]
    if not corrupt:
        checks += _guard("cone", lambda: _cone_checks(ctx), N=N)
    else:
        checks.append(Check("cone tables and invariance", "SKIPPED", {"N": N}, "corrupted context"))
    return checks
