"""Attained duality: maximizing kernels, gaps, subgradients, Fenchel-Young."""

import numpy as np
import pytest

import atv
from tests.conftest import random_measures


def kernel_target(kern, row):
    """Index of the single support point of a Dirac row."""
    dom = kern.domain
    lo, hi = dom.ball_indptr[row], dom.ball_indptr[row + 1]
    nz = np.nonzero(kern.values[lo:hi])[0]
    assert nz.size == 1
    return int(dom.ball_indices[lo + nz[0]])


def test_maximizing_kernels_attain_tv(grid1d, grid2d):
    rng = np.random.default_rng(0)
    for dom in (grid1d, grid2d):
        for _ in range(100):
            meas = random_measures(dom, rng)
            u = rng.random(dom.n)
            tv = atv.eval_tv(u, meas, dom)
            pair = atv.maximizing_kernels(u, meas, dom)
            dual = atv.dual_eval(pair, u, meas, dom)
            assert abs(tv - dual) <= 1e-10 * (1.0 + tv)


def test_monotone_field_selects_ball_endpoints(grid1d):
    rng = np.random.default_rng(1)
    meas = random_measures(grid1d, rng)
    u = np.sort(rng.random(grid1d.n))  # nondecreasing; strictly so a.s.
    pair = atv.maximizing_kernels(u, meas, grid1d)
    for i in range(grid1d.n):
        assert kernel_target(pair.m0, i) == int(grid1d.balls[i][-1])
        assert kernel_target(pair.m1, i) == int(grid1d.balls[i][0])


def test_constant_field_gap_and_kernels(grid1d, uniform1d):
    u = np.full(10, 0.6)
    for tie_break in ("lowest", "highest", "self"):
        pair = atv.maximizing_kernels(u, uniform1d, grid1d, tie_break=tie_break)
        assert atv.dual_eval(pair, u, uniform1d, grid1d) == pytest.approx(0.0, abs=1e-15)
        assert atv.duality_gap(u, uniform1d, grid1d, pair=pair) == pytest.approx(0.0, abs=1e-15)
    self_pair = atv.maximizing_kernels(u, uniform1d, grid1d, tie_break="self")
    for i in range(grid1d.n):
        assert kernel_target(self_pair.m0, i) == i
        assert kernel_target(self_pair.m1, i) == i


def test_zero_mass_rows_get_self_diracs(grid1d):
    rho0 = np.zeros(10)
    rho0[7] = 1.0
    rho1 = np.zeros(10)
    rho1[2] = 1.0
    total = (rho0 + rho1) @ grid1d.quad_weights
    meas = atv.ClassMeasures(rho0=rho0 / total, rho1=rho1 / total,
                             nu_weights=grid1d.quad_weights.copy())
    u = np.linspace(0.0, 1.0, 10)
    pair = atv.maximizing_kernels(u, meas, grid1d)
    for i in range(10):
        if meas.rho0[i] == 0.0:
            assert kernel_target(pair.m0, i) == i
        if meas.rho1[i] == 0.0:
            assert kernel_target(pair.m1, i) == i


def test_maximizing_kernels_are_feasible(grid2d):
    rng = np.random.default_rng(2)
    meas = random_measures(grid2d, rng)
    u = rng.random(grid2d.n)
    pair = atv.maximizing_kernels(u, meas, grid2d)
    pair.m0.check()
    pair.m1.check()


def test_weak_duality_over_random_kernels(grid1d):
    rng = np.random.default_rng(3)
    meas = random_measures(grid1d, rng)
    u = rng.random(grid1d.n)
    tv = atv.eval_tv(u, meas, grid1d)
    for _ in range(500):
        pair = atv.KernelPair(atv.random_kernel(grid1d, rng),
                              atv.random_kernel(grid1d, rng))
        assert atv.dual_eval(pair, u, meas, grid1d) <= tv + 1e-10


def test_uniform_kernels_leave_a_positive_gap(grid1d, uniform1d):
    u = grid1d.points[:, 0].copy()
    pair = atv.KernelPair(atv.uniform_kernel(grid1d), atv.uniform_kernel(grid1d))
    gap = atv.duality_gap(u, uniform1d, grid1d, pair=pair)
    assert gap > 1e-3


def test_self_dirac_pair_scores_zero(grid1d, uniform1d):
    ident = atv.dirac_kernel(grid1d, np.arange(10))
    pair = atv.KernelPair(ident, ident)
    u = np.random.default_rng(4).random(10)
    assert atv.dual_eval(pair, u, uniform1d, grid1d) == pytest.approx(0.0, abs=1e-15)


def test_gap_without_explicit_pair_uses_the_maximizer(grid2d):
    rng = np.random.default_rng(5)
    meas = random_measures(grid2d, rng)
    u = rng.random(grid2d.n)
    assert abs(atv.duality_gap(u, meas, grid2d)) <= 1e-10


def test_fenchel_young_equality(grid1d, grid2d):
    rng = np.random.default_rng(6)
    for dom in (grid1d, grid2d):
        for _ in range(100):
            meas = random_measures(dom, rng)
            u = rng.random(dom.n)
            p = atv.subgradient(u, meas, dom)
            tv = atv.eval_tv(u, meas, dom)
            assert abs(p @ (u * dom.quad_weights) - tv) <= 1e-10 * (1.0 + tv)


def test_subgradient_total_mass_vanishes(grid2d):
    rng = np.random.default_rng(7)
    for _ in range(20):
        meas = random_measures(grid2d, rng)
        u = rng.random(grid2d.n)
        p = atv.subgradient(u, meas, grid2d)
        assert abs(p @ grid2d.quad_weights) <= 1e-12


def test_subgradient_passes_its_own_check(grid1d):
    rng = np.random.default_rng(8)
    meas = random_measures(grid1d, rng)
    u = rng.random(grid1d.n)
    p = atv.subgradient(u, meas, grid1d)
    worst = atv.check_subgradient(p, u, meas, grid1d, n_trials=1000, seed=0)
    assert worst >= -1e-10


def test_doubled_subgradient_fails_the_check(grid1d):
    rng = np.random.default_rng(9)
    meas = random_measures(grid1d, rng)
    u = rng.random(grid1d.n)
    tv = atv.eval_tv(u, meas, grid1d)
    assert tv > 0.01
    p = atv.subgradient(u, meas, grid1d)
    worst = atv.check_subgradient(2.0 * p, u, meas, grid1d, n_trials=50, seed=0)
    assert worst <= -tv + 1e-10


def test_constant_field_zero_subgradient_check(grid1d, uniform1d):
    u = np.full(10, 0.2)
    p = atv.subgradient(u, uniform1d, grid1d)
    assert np.max(np.abs(p)) <= 1e-15
    worst = atv.check_subgradient(np.zeros(10), u, uniform1d, grid1d,
                                  n_trials=200, seed=1)
    assert worst == pytest.approx(0.0, abs=1e-15)


def test_pushforward_route_matches_divergence_route(grid1d):
    rng = np.random.default_rng(10)
    for _ in range(20):
        meas = random_measures(grid1d, rng)
        u = np.sort(rng.random(grid1d.n))
        p_div = atv.subgradient(u, meas, grid1d)
        p_push = atv.pushforward_subgradient(u, meas, grid1d)
        assert np.max(np.abs(p_div - p_push)) <= 1e-12


def test_unique_extrema_make_tie_breaking_irrelevant(grid1d):
    rng = np.random.default_rng(11)
    meas = random_measures(grid1d, rng)
    u = np.sort(rng.random(grid1d.n))
    reference = atv.subgradient(u, meas, grid1d, tie_break="lowest")
    for tie_break in ("highest", "self"):
        other = atv.subgradient(u, meas, grid1d, tie_break=tie_break)
        assert np.max(np.abs(reference - other)) <= 1e-15


def test_dual_eval_agrees_with_gradient_pairing(grid1d):
    rng = np.random.default_rng(12)
    meas = random_measures(grid1d, rng)
    u = rng.random(grid1d.n)
    pair = atv.maximizing_kernels(u, meas, grid1d)
    by_div = atv.dual_eval(pair, u, meas, grid1d)
    g = atv.nonlocal_gradient(u, grid1d).values
    f = atv.pairing(pair, meas).values
    rows = np.repeat(np.arange(grid1d.n), grid1d.ball_sizes)
    cols = grid1d.ball_indices
    w = grid1d.quad_weights
    by_pairing = float(np.sum(g * f * w[cols] * w[rows]))
    assert abs(by_div - by_pairing) <= 1e-12 * (1.0 + abs(by_div))


def test_tie_break_name_is_validated(grid1d, uniform1d):
    with pytest.raises(ValueError, match="tie_break"):
        atv.maximizing_kernels(np.zeros(10), uniform1d, grid1d, tie_break="random")
