import random
from fractions import Fraction
from math import log, tanh

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gasket_density import EdgeAddress, SymbolStream, Word, build_context, cone, edge, energy, exact

f = Fraction


@pytest.fixture(scope="module")
def frames():
    out = {}
    for N in (2, 3):
        ctx = build_context(N)
        fr = cone.paper_cone(ctx, 1, 2)
        out[N] = (ctx, fr, cone.contraction_estimate(ctx, fr, samples=1000))
    return out


def test_build_Tk_examples():
    t1 = cone.build_Tk(build_context(2), 1)
    assert t1 == exact.mat_scale(f(1, 5), ((2, -1, -1), (-1, 1, 0), (-1, 0, 1)))
    t1 = cone.build_Tk(build_context(3), 1)
    assert t1 == exact.mat_scale(f(1, 6), ((3, -1, -1, -1), (-1, 1, 0, 0), (-1, 0, 1, 0), (-1, 0, 0, 1)))
    for k in (1, 2, 3):
        assert exact.mat_vec(cone.build_Tk(build_context(2), k), (1, 1, 1)) == (0, 0, 0)


def test_tables_and_example_expansion(ctx):
    assert all(c.passed for c in cone.table_check(ctx))
    if ctx.N == 2:
        t1 = cone.build_Tk(ctx, 1)
        a1, a2 = cone.CONE_GENERATORS[2]
        assert exact.mat_vec(t1, a1) == exact.scale(f(1, 5), (3, -4, 1))
        assert exact.add(exact.scale(f(9, 40), a1), exact.scale(f(5, 40), a2)) == exact.scale(f(1, 5), (3, -4, 1))


@pytest.mark.parametrize("N", [2, 3])
def test_all_pairs_invariant(N):
    ctx = build_context(N)
    for i in ctx.symbols:
        for j in ctx.symbols:
            if i != j:
                fr = cone.paper_cone(ctx, i, j)
                assert fr.invariant()
                for k in (i, j):
                    t = cone.build_Tk(ctx, k)
                    for l, a in enumerate(fr.generators):
                        img = exact.mat_vec(t, a)
                        assert exact.lstsq_coords(fr.generators, img) == tuple(row[l] for row in fr.C[k])


def test_unsupported_dimension():
    with pytest.raises(cone.UnsupportedDimension):
        cone.paper_cone(build_context(4))


def test_hilbert_examples(frames):
    ctx, fr, _ = frames[2]
    a1, a2 = fr.generators
    x = exact.add(a1, a2)
    y = exact.add(a1, exact.scale(2, a2))
    assert cone.hilbert_metric(fr, x, x) == 0
    assert cone.hilbert_metric(fr, x, y) == pytest.approx(log(2))
    assert cone.hilbert_metric(fr, a1, a2) == float("inf")
    with pytest.raises(ValueError):
        cone.hilbert_metric(fr, exact.scale(-1, x), x)


pos = st.lists(st.floats(0.01, 100), min_size=3, max_size=3).map(np.array)


@given(pos, pos, pos, st.floats(0.1, 10), st.floats(0.1, 10))
def test_hilbert_axioms(x, y, z, s, t):
    d = cone.hilbert_metric_coords
    assert d(x, y) == pytest.approx(d(y, x))
    assert d(x, z) <= d(x, y) + d(y, z) + 1e-9
    assert d(s * x, t * y) == pytest.approx(d(x, y), abs=1e-9)
    assert d(x, 3 * x) == pytest.approx(0, abs=1e-12)


def test_contraction_estimate(frames):
    ctx, fr, est = frames[2]
    assert est.diam[1] == pytest.approx(log(69 / 5))
    assert est.tau[1] == pytest.approx(tanh(log(69 / 5) / 4)) and est.tau[1] == pytest.approx(0.576, abs=1e-3)
    for N in (2, 3):
        _, _, e = frames[N]
        assert all(t < 1 for t in e.tau.values()) and e.joint < 1 and e.dual_joint < 1
        assert all(e.empirical[k] <= e.tau[k] + 1e-9 for k in e.tau)
        assert np.isfinite(e.lipschitz) and e.lipschitz >= 1


@pytest.mark.parametrize("N", [2, 3])
def test_rho_constant_tail_is_eigenvector(frames, N):
    ctx, fr, est = frames[N]
    for k in (1, 2):
        om = SymbolStream.eventually("", k, N)
        st_ = cone.rho_limit(ctx, fr, om, 1e-12, estimate=est)
        ref = cone.rho_exact_tail(ctx, fr, Word.empty(N), k)
        assert np.allclose(st_.rho, ref, atol=1e-9)
        assert np.all(st_.rho > 0) and st_.certified


def test_rho_independent_of_start(frames):
    ctx, fr, est = frames[3]
    om = SymbolStream(Word((1, 2, 2), 3), generator=lambda k: 1 + (k * k) % 2)
    rng = np.random.default_rng(4)
    a = cone.rho_limit(ctx, fr, om, 1e-11, start=rng.uniform(0.1, 5, 3), estimate=est)
    b = cone.rho_limit(ctx, fr, om, 1e-11, start=rng.uniform(0.1, 5, 3), estimate=est)
    assert np.abs(a.rho - b.rho).max() < 1e-9
    assert all(s <= bd * (1 + 1e-9) + 1e-15 for s, bd in zip(a.steps[1:], a.bounds[1:]))


def test_rho_rejects(frames):
    ctx, fr, est = frames[2]
    with pytest.raises(ValueError):
        cone.rho_limit(ctx, fr, SymbolStream.eventually("", 3, 2), estimate=est)
    with pytest.raises(ValueError):
        cone.rho_limit(ctx, fr, SymbolStream.eventually("", 1, 2), start=np.array([1.0, -1.0]), estimate=est)


@pytest.mark.parametrize("N", [2, 3])
def test_density_along_matches_profiles(frames, N):
    ctx, fr, est = frames[N]
    rng = random.Random(N)
    e = EdgeAddress(Word((3,), N), 1, 2)
    for _ in range(50):
        u = tuple(f(rng.randint(-9, 9), rng.randint(1, 3)) for _ in range(ctx.size))
        m = rng.randrange(1, 256, 2)
        path = e.binary_word((m - 1) // 2, 7)
        got = cone.density_along(ctx, fr, e, u, SymbolStream.eventually(path + (1,), 2, N), 1e-12, est)
        ref = edge.delta_at_vertex(ctx, u, e.prefix + path, 1, 2)
        assert got.value == pytest.approx(float(ref), abs=1e-8 * max(1.0, float(ref)))


def test_density_basis_sum_and_scaling(frames):
    ctx, fr, est = frames[2]
    e = EdgeAddress(Word((2, 3), 2), 1, 2)
    om = SymbolStream(Word((1,), 2), generator=lambda k: 1 + (k % 3 == 0))
    total = sum(cone.density_along(ctx, fr, e, ctx.e(k), om, 1e-12, est).value for k in ctx.symbols)
    assert total == pytest.approx(1.0, abs=1e-10)
    u = (f(1), f(-2), f(5, 3))
    base = cone.density_along(ctx, fr, e, u, om, 1e-12, est).value
    scaled = cone.density_along(ctx, fr, e, tuple(3 * x for x in u), om, 1e-12, est).value
    assert scaled == pytest.approx(9 * base, rel=1e-10)


def test_density_along_corner(frames):
    ctx, fr, est = frames[2]
    e = EdgeAddress(Word.empty(2), 1, 2)
    got = cone.density_along(ctx, fr, e, ctx.e(1), SymbolStream.eventually("", 2, 2), 1e-12, est)
    assert got.value == pytest.approx(float(energy.corner_limit(ctx, ctx.e(1), (), 2).value), abs=1e-10)
    other = cone.paper_cone(ctx, 2, 3)
    with pytest.raises(ValueError):
        cone.density_along(ctx, other, e, ctx.e(1), SymbolStream.eventually("", 2, 2))


@pytest.mark.parametrize("N", [2, 3])
def test_continuity(frames, N):
    ctx, fr, _ = frames[N]
    e = EdgeAddress(Word.empty(N), 1, 2)
    rep = cone.continuity_modulus(ctx, fr, e, tuple(range(1, N + 2)), m_max=12, prefixes=3)
    assert all(c.passed for c in rep.checks), [c.line() for c in rep.checks]
    assert rep.rate < 1 and max(rep.quotient_errors) < 1e-9
