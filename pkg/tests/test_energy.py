import random
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gasket_density import build_context, energy
from gasket_density.harmonic import apply_word, q0_pairs
from gasket_density.verify import householder_basis

f = Fraction


def test_cell_energy_examples(ctx2):
    e1 = ctx2.e(1)
    assert energy.cell_energy(ctx2, e1, ()) == 4
    assert energy.cell_energy(ctx2, e1, (1,)) == f(12, 5)
    assert energy.cell_energy(ctx2, (7, 7, 7), (1, 2, 3)) == 0


def test_kusuoka_examples(ctx2):
    assert energy.kusuoka_cell(ctx2, ()) == 12
    assert all(energy.kusuoka_cell(ctx2, (k,)) == 4 for k in (1, 2, 3))
    for N in (3, 4, 5):
        ctx = build_context(N)
        assert energy.kusuoka_cell(ctx, ()) == 2 * N * (N + 1)


def test_cell_ratio_example(ctx2):
    assert energy.cell_ratio(ctx2, ctx2.e(1), ()) == f(1, 3)


def test_corner_limit_example_against_float_iteration(ctx2):
    lim = energy.corner_limit(ctx2, ctx2.e(1), (), 1)
    assert lim.value == f(2, 3)
    approx = energy.cell_ratio(ctx2, ctx2.e(1), (1,) * 40, "float")
    assert approx == pytest.approx(2 / 3, abs=1e-12)
    assert energy.corner_limit(ctx2, (2, 2, 2), (3,), 1).value == 0


words2 = st.lists(st.integers(1, 3), max_size=5).map(tuple)
vec3 = st.lists(st.integers(-6, 6), min_size=3, max_size=3).map(tuple)


@given(vec3, words2)
def test_energy_additivity(u, w):
    ctx = build_context(2)
    total = sum(energy.cell_energy(ctx, u, w + (k,)) for k in ctx.symbols)
    assert total == energy.cell_energy(ctx, u, w)


@given(vec3, words2, words2)
def test_restriction_identity(u, w, w2):
    # the energy measure of h restricted to K_w is the pushed-forward measure of h o psi_w
    ctx = build_context(2)
    x = apply_word(ctx, w, u)
    lhs = energy.cell_energy(ctx, u, w + w2)
    rhs = ctx.scale ** len(w) * energy.cell_energy(ctx, x, w2)
    assert lhs == rhs


@given(vec3, words2)
def test_exact_and_float_agree(u, w):
    ctx = build_context(2)
    ex = energy.cell_ratio(ctx, u, w)
    fl = energy.cell_ratio(ctx, u, w, "float")
    assert fl == pytest.approx(float(ex), rel=1e-9, abs=1e-14)
    # the ratio never exceeds the largest eigenvalue bound |Pu|^2
    assert ex <= sum((c - sum(u, f(0)) / 3) ** 2 for c in map(f, u))


def test_kusuoka_uses_pair_formula(ctx3):
    rng = random.Random(0)
    for _ in range(10):
        w = tuple(rng.choice(ctx3.symbols) for _ in range(4))
        ref = sum(2 * ctx3.scale ** 4 * q0_pairs(apply_word(ctx3, w, ctx3.e(k)), apply_word(ctx3, w, ctx3.e(k)))
                  for k in ctx3.symbols)
        assert energy.kusuoka_cell(ctx3, w) == ref


def test_standard_basis_sums_to_one(ctx):
    for w in [(), (1,), (2, 1, 3), (1, 1, 1, 2)]:
        assert sum(energy.cell_ratio(ctx, ctx.e(k), w) for k in ctx.symbols) == 1


def test_onb_exact_and_float(ctx):
    basis = householder_basis([1, 2, 3, 5][: ctx.size])
    words = [(), (1,), (2, 3), (3, 1, 2, 1)]
    assert all(c.passed for c in energy.onb_decomposition_check(ctx, basis, words))
    q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(ctx.size, ctx.size)))
    assert all(c.passed for c in energy.onb_decomposition_check(ctx, q, words, "float"))
    with pytest.raises(ValueError):
        energy.onb_decomposition_check(ctx, [ctx.e(1)] * ctx.size, words)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_convergence_rates(N):
    ctx = build_context(N)
    rep = energy.convergence_rate_check(ctx, tuple(range(N + 1)), (2,), 1)
    assert all(c.passed for c in rep.checks)
    assert rep.vector_error_ratio == pytest.approx(1 / (N + 1), rel=0.02)
    assert rep.energy_error_ratio == pytest.approx(1 / (N + 1) ** 2, rel=0.05)
    assert 0 < rep.kusuoka_inf <= rep.kusuoka_sup


def test_symmetric_tail(ctx):
    N = ctx.N
    u = (0, 0) + tuple(range(1, N))
    rep = energy.symmetric_tail_ratio(ctx, u, (), 1, 2)
    assert rep.slope == pytest.approx(-2 * np.log(N + 1), rel=0.05)
    assert rep.energy_slope == pytest.approx(rep.predicted_energy_slope, rel=0.05)
    assert rep.rows()[0] == "n,ratio,log_ratio" and len(rep.rows()) == 32
    with pytest.raises(ValueError):
        energy.symmetric_tail_ratio(ctx, tuple(range(N + 1)), (), 1, 2)
    flat = energy.symmetric_tail_ratio(ctx, (1,) * (N + 1), (), 1, 2, 12, (2, 12))
    assert all(r == 0 for r in flat.ratios)


def test_vanishing_trivial_and_symmetric(ctx2):
    assert energy.find_vanishing_cell(ctx2, (3, 3, 3)).case == "trivial"
    wit = energy.find_vanishing_cell(ctx2, (0, 0, 1), (), Fraction(1, 10 ** 6))
    assert wit.case == "symmetric" and wit.ratio < Fraction(1, 10 ** 6)
    assert wit.word.symbols[0] == 1 and set(wit.word.symbols[1:]) == {2}
    # oracle: the first n along 1 2^n whose ratio drops below eps
    ratios = [energy.cell_ratio(ctx2, (0, 0, 1), (1,) + (2,) * n) for n in range(20)]
    first = next(n for n, r in enumerate(ratios) if r < Fraction(1, 10 ** 6))
    assert len(wit.word) == first + 1


@pytest.mark.parametrize("N,u,w", [(2, (0, 1, 5), ()), (2, (0, 1, 2), ()), (2, (0, 2, 3), (1, 2)),
                                   (3, (0, 1, 5, 2), ()), (3, (4, -1, 0, 9), (2,))])
def test_vanishing_witness_against_brute_force(N, u, w):
    ctx = build_context(N)
    eps = Fraction(1, 1000)
    wit = energy.find_vanishing_cell(ctx, u, w, eps)
    assert wit.ratio < eps
    assert energy.cell_ratio(ctx, u, ctx.word(w) + wit.word) == wit.ratio
    if wit.ratio_bound is not None:
        assert float(wit.ratio) <= wit.ratio_bound * (1 + 1e-9)
    x = apply_word(ctx, w, u)
    scan = energy.level_scan(ctx, [x], 8 if N == 3 else 10)
    assert scan.min_ratio[0] < float(eps)


def test_vanishing_rejects_bad_eps(ctx2):
    with pytest.raises(ValueError):
        energy.find_vanishing_cell(ctx2, (0, 1, 5), (), 0)


def test_search_exhausted_reports_best(ctx2):
    with pytest.raises(energy.SearchExhausted) as info:
        energy.find_vanishing_cell(ctx2, (0, 1, 5), (), Fraction(1, 10 ** 300), depth_cap=3, dyadic_cap=3)
    assert info.value.best_ratio > 0


def test_level_scan_matches_exact_loop(ctx2):
    us = [(0, 1, 5), (2, -1, 0)]
    scan = energy.level_scan(ctx2, us, 4, chunk=5)
    for k, u in enumerate(us):
        vals = {w: energy.cell_ratio(ctx2, u, w) for w in product((1, 2, 3), repeat=4)}
        lo = min(vals.values())
        assert scan.min_ratio[k] == pytest.approx(float(lo), rel=1e-9)
        assert vals[scan.argmin[k].symbols] == lo
        assert scan.max_ratio[k] == pytest.approx(float(max(vals.values())), rel=1e-9)


def test_level_minimum_is_monotone(ctx3):
    us = [(0, 1, 5, 2), (3, -2, 0, 1)]
    mins = [energy.level_scan(ctx3, us, n).min_ratio for n in range(7)]
    maxs = [energy.level_scan(ctx3, us, n).max_ratio for n in range(7)]
    for a, b in zip(mins, mins[1:]):
        assert np.all(b <= a * (1 + 1e-12))
    for a, b in zip(maxs, maxs[1:]):
        assert np.all(b >= a * (1 - 1e-12))


def test_word_matrix_enumeration(ctx2):
    seen = list(energy.iter_word_matrices(ctx2, 2))
    assert len(seen) == 1 + 3 + 9
    for w, a in seen:
        assert energy.kusuoka_from_matrix(ctx2, a, len(w)) == energy.kusuoka_cell(ctx2, w)


def test_ratio_rows_format(ctx2):
    rows = energy.ratio_rows(ctx2, ctx2.e(1), [(), (1,)])
    assert rows == ["word,nu_h,nu,ratio", "-,4,12,1/3", "1,12/5,4,3/5"]
