import random
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gasket_density import EdgeAddress, Word, build_context, edge, energy, exact

f = Fraction
vec3 = st.lists(st.integers(-6, 6), min_size=3, max_size=3).map(tuple)
words2 = st.lists(st.integers(1, 3), max_size=4).map(tuple)
pairs2 = st.sampled_from([(1, 2), (2, 1), (1, 3), (3, 2)])


def test_vertex_density_example(ctx2):
    assert edge.delta_at_vertex(ctx2, ctx2.e(1), (), 1, 2) == f(1, 2)
    approx = energy.cell_ratio(ctx2, ctx2.e(1), (1,) + (2,) * 40, "float")
    assert approx == pytest.approx(0.5, abs=1e-12)


@given(vec3, words2, pairs2)
def test_vertex_density_independent_of_representation(u, w, ij):
    ctx = build_context(2)
    i, j = ij
    a = edge.delta_at_vertex(ctx, u, w, i, j)
    assert a == edge.delta_at_vertex(ctx, u, w, j, i)
    # oracle: float cell ratios along both tails
    r1 = energy.cell_ratio(ctx, u, tuple(w) + (i,) + (j,) * 40, "float")
    r2 = energy.cell_ratio(ctx, u, tuple(w) + (j,) + (i,) * 40, "float")
    scale = max(1.0, float(a))
    assert abs(r1 - float(a)) < 1e-9 * scale and abs(r2 - float(a)) < 1e-9 * scale


@given(vec3, words2, pairs2, st.fractions(min_value=-5, max_value=5, max_denominator=7))
def test_density_scales_quadratically(u, w, ij, c):
    ctx = build_context(2)
    i, j = ij
    cu = tuple(c * x for x in u)
    assert edge.delta_at_vertex(ctx, cu, w, i, j) == c * c * edge.delta_at_vertex(ctx, u, w, i, j)
    assert sum(edge.delta_at_vertex(ctx, ctx.e(k), w, i, j) for k in ctx.symbols) == 1


@given(vec3, words2, pairs2)
def test_delta_gap_factored_form(u, w, ij):
    ctx = build_context(2)
    i, j = ij
    direct = energy.corner_limit(ctx, u, w, i).value - energy.corner_limit(ctx, u, w, j).value
    assert edge.delta_gap(ctx, u, w, i, j) == direct


def test_delta_gap_examples(ctx2):
    assert edge.delta_gap(ctx2, ctx2.e(1), (), 1, 2) == f(1, 2)
    assert edge.delta_gap(ctx2, (4, 4, 4), (1,), 1, 2) == 0
    with pytest.raises(ValueError):
        edge.delta_gap(ctx2, ctx2.e(1), (), 1, 1)


def test_det_identity_pointwise_and_sweep(ctx):
    u = tuple(f(k * k + 1, k + 2) for k in range(ctx.size))
    assert edge.det_identity_check(ctx, u, (3, 1), (), 1, 1, 2)
    assert all(edge.det_identity_check(ctx, u, (2,), w2, k, 1, 2)
               for w2 in product((1, 2), repeat=3) for k in ctx.symbols)
    count, fail = edge.det_identity_sweep(ctx, u, (2,), 1, 2, 5)
    assert fail is None and count == 2 ** 6 - 1
    with pytest.raises(ValueError):
        edge.det_identity_check(ctx, u, (), (3,), 1, 1, 2)


def test_dual_norm_floor(ctx):
    assert edge.dual_norm_floor(ctx, 0) == ctx.N + 1 == exact.norm_sq(ctx.d[0]) / ctx.N
    count, fail = edge.dual_norm_sweep(ctx, 1, 2, 6)
    assert fail is None and count == 2 * (2 ** 7 - 1)
    assert all(edge.dual_norm_lower_bound_check(ctx, w2, 1, 1, 2) for w2 in product((1, 2), repeat=4))
    with pytest.raises(ValueError):
        edge.dual_norm_lower_bound_check(ctx, (1,), 3, 1, 2)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_psd_minors(N):
    ctx = build_context(N)
    for k in ctx.symbols:
        m = edge.psd_minors(ctx, k)
        assert m[0] == (N + 2) * (N + 4)
        assert m[1] == N ** 3 + 8 * N * N + 20 * N + 12
        assert all(x == 0 for x in m[2:])
    if N == 2:
        assert edge.psd_minors(ctx, 1)[:2] == [24, 92]


def test_psd_minors_against_numpy(ctx3):
    a = exact.to_numpy(ctx3.a(2))
    b = 36 * a @ a.T - np.eye(4)
    assert np.linalg.eigvalsh(b).min() > -1e-9


def test_gap_constant_example(ctx2):
    gc = edge.gap_constant(ctx2, ctx2.e(1), (), 1, 2)
    assert gc.c == 12
    assert gc.minors == (0, 3, -3) or [abs(m) for m in gc.minors] == [0, 3, 3]
    assert gc.bound(ctx2, 2) == 4 * f(4, 9)


def test_gap_constant_is_lower_bound(ctx3):
    u = (f(1, 3), -2, 5, f(7, 2))
    gc = edge.gap_constant(ctx3, u, (2, 4), 1, 3)
    a = exact.to_numpy(edge.word_matrix(ctx3, (2, 4)))
    uf = np.array([float(x) for x in u])
    true = 2 * 6.0 ** 8 * np.linalg.norm(a @ uf) * sum(
        np.linalg.norm(a[:, k]) * abs(float(m)) for k, m in enumerate(gc.minors))
    assert float(gc.c) <= true <= float(gc.c) * (1 + 1e-12)


def test_holder_bound(ctx):
    rng = random.Random(ctx.N)
    for _ in range(3):
        u = tuple(f(rng.randint(-9, 9)) for _ in range(ctx.size))
        rep = edge.holder_bound_check(ctx, u, (rng.choice(ctx.symbols),), 1, 2, 7)
        assert rep.passed and rep.checked == 2 ** 8 - 1
    flat = edge.holder_bound_check(ctx, (1,) * ctx.size, (), 1, 2, 4)
    assert flat.passed and flat.constant.c == 0
    with pytest.raises(ValueError):
        edge.holder_bound_check(ctx, (1,) * ctx.size, (), 1, 2, 13)


def test_profile_examples(ctx2):
    e = EdgeAddress.parse(":1:2", 2)
    s = edge.edge_profile(ctx2, ctx2.e(1), e, 1)
    assert [(x.t, x.density) for x in s] == [(0, f(2, 3)), (f(1, 2), f(1, 2)), (1, f(1, 6))]
    s0 = edge.edge_profile(ctx2, ctx2.e(1), e, 0)
    assert len(s0) == 2
    rows = edge.profile_rows(s)
    assert rows[0] == "t_num,t_den,t,density,density_exact" and rows[2] == "1,2,0.5,0.5,1/2"


@pytest.mark.parametrize("N,text", [(2, "31:2:3"), (3, "4:1:3"), (2, ":3:1")])
def test_profile_chain_and_modes(N, text):
    ctx = build_context(N)
    e = EdgeAddress.parse(text, N)
    u = tuple(f(k * 3 - 4, k + 1) for k in range(N + 1))
    p5 = edge.edge_profile(ctx, u, e, 5)
    p6 = edge.edge_profile(ctx, u, e, 6)
    assert [x.density for x in p6[::2]] == [x.density for x in p5]
    fl = edge.edge_profile(ctx, u, e, 6, "float")
    assert np.allclose(fl, [float(x.density) for x in p6], rtol=1e-12, atol=1e-14)
    # each sample is the density at that vertex, however it is reached
    for x in p5[1:-1]:
        m, n = x.t.numerator, x.t.denominator.bit_length() - 1
        path = e.binary_word((m - 1) // 2, n - 1)
        assert x.density == edge.delta_at_vertex(ctx, u, e.prefix + path, e.i, e.j)


def test_profiles_of_basis_sum_to_one(ctx):
    e = EdgeAddress(Word((2,), ctx.N), 1, 3)
    total = sum(edge.edge_profile(ctx, ctx.e(k), e, 10, "float") for k in ctx.symbols)
    assert np.allclose(total, 1.0, atol=1e-12)


def test_profile_depth_limits(ctx2):
    e = EdgeAddress.parse(":1:2", 2)
    with pytest.raises(ValueError):
        edge.edge_profile(ctx2, ctx2.e(1), e, 13)
    with pytest.raises(ValueError):
        edge.edge_profile(ctx2, ctx2.e(1), e, 21, "float")


def test_empirical_holder():
    assert edge.empirical_holder(np.zeros(9), 0.5).sup_quotient == 0
    lin = np.linspace(0, 2, 17)
    rep = edge.empirical_holder(lin, 1.0)
    assert rep.sup_quotient == pytest.approx(2.0)
    assert edge.holder_exponent(2) == pytest.approx(np.log2(1.5))


def test_holder_quotient_stabilizes(ctx2):
    e = EdgeAddress.parse(":1:2", 2)
    theta = edge.holder_exponent(2)
    q = [edge.empirical_holder(edge.edge_profile(ctx2, ctx2.e(3), e, d, "float"), theta).sup_quotient
         for d in (8, 10)]
    assert q[1] / q[0] < 1.1
