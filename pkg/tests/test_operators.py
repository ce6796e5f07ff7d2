"""Nonlocal gradient/divergence identities, kernels, and integration by parts."""

import numpy as np
import pytest

import atv
from atv.operators import PairField
from tests.conftest import random_measures


def pair_rows_cols(domain):
    rows = np.repeat(np.arange(domain.n), domain.ball_sizes)
    return rows, domain.ball_indices


def test_constant_field_has_zero_gradient(grid1d):
    g = atv.nonlocal_gradient(np.full(10, 3.7), grid1d)
    assert np.all(g.values == 0.0)


def test_gradient_of_identity_on_adjacent_pair(grid1d):
    u = grid1d.points[:, 0].copy()
    g = atv.nonlocal_gradient(u, grid1d)
    assert g.at(4, 5) == pytest.approx(0.1 / 0.25, rel=1e-15)
    assert g.at(5, 4) == pytest.approx(-0.4, rel=1e-15)


def test_gradient_antisymmetry_on_random_fields(grid1d):
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.standard_normal(grid1d.n)
        g = atv.nonlocal_gradient(u, grid1d)
        for i in range(grid1d.n):
            for j in grid1d.balls[i]:
                assert g.at(i, j) == -g.at(j, i)


def test_gradient_linearity(grid2d):
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal((2, grid2d.n))
    gu = atv.nonlocal_gradient(u, grid2d).values
    gv = atv.nonlocal_gradient(v, grid2d).values
    gboth = atv.nonlocal_gradient(2.0 * u - 3.0 * v, grid2d).values
    assert np.allclose(gboth, 2.0 * gu - 3.0 * gv, atol=1e-14)


def test_symmetric_pairfield_has_zero_divergence(grid1d):
    rows, cols = pair_rows_cols(grid1d)
    u = np.random.default_rng(2).random(grid1d.n)
    f = PairField(values=u[rows] + u[cols], domain=grid1d)
    div = atv.nonlocal_divergence_l1(f, grid1d)
    assert np.max(np.abs(div)) <= 1e-14


def test_single_pair_divergence(grid1d):
    values = np.zeros(grid1d.ball_indices.size)
    pos = grid1d.pair_positions(np.array([3]), np.array([4]))
    values[pos] = 1.0
    div = atv.nonlocal_divergence_l1(PairField(values=values, domain=grid1d), grid1d)
    w, eps = grid1d.quad_weights, grid1d.epsilon
    expected = np.zeros(grid1d.n)
    expected[3] = w[4] / eps
    expected[4] = -w[3] / eps
    assert np.allclose(div, expected, atol=1e-15)


def test_divergence_linearity(grid1d):
    rng = np.random.default_rng(3)
    a = rng.standard_normal(grid1d.ball_indices.size)
    b = rng.standard_normal(grid1d.ball_indices.size)
    da = atv.nonlocal_divergence_l1(PairField(values=a, domain=grid1d), grid1d)
    db = atv.nonlocal_divergence_l1(PairField(values=b, domain=grid1d), grid1d)
    dab = atv.nonlocal_divergence_l1(PairField(values=a + 0.5 * b, domain=grid1d), grid1d)
    assert np.allclose(dab, da + 0.5 * db, atol=1e-13)


def test_identity_kernel_divergence_vanishes(grid1d):
    ident = atv.dirac_kernel(grid1d, np.arange(grid1d.n))
    rho = np.random.default_rng(4).random(grid1d.n)
    div = atv.kernel_divergence(ident, rho, grid1d)
    assert np.max(np.abs(div)) <= 1e-14


def test_kernel_divergence_total_mass_is_zero(grid2d):
    rng = np.random.default_rng(5)
    for _ in range(10):
        kern = atv.random_kernel(grid2d, rng)
        rho = rng.random(grid2d.n)
        div = atv.kernel_divergence(kern, rho, grid2d)
        assert abs(div @ grid2d.quad_weights) <= 1e-12


def test_two_point_transport_divergence():
    dom = atv.build_point_cloud([[0.0], [1.0]], epsilon=1.0)
    values = np.zeros(dom.ball_indices.size)
    values[dom.pair_positions(np.array([0]), np.array([1]))] = 1.0  # 0 -> 1 fully
    values[dom.pair_positions(np.array([1]), np.array([1]))] = 1.0  # 1 stays put
    kern = atv.TransitionKernel(values=values, domain=dom)
    kern.check()
    div = atv.kernel_divergence(kern, np.array([1.0, 0.0]), dom)
    assert div.tolist() == [1.0, -1.0]


def test_dirac_kernel_rows_integrate_to_one(grid2d):
    rng = np.random.default_rng(6)
    targets = np.array([rng.choice(b) for b in grid2d.balls])
    kern = atv.dirac_kernel(grid2d, targets)
    assert np.max(np.abs(kern.row_integrals() - 1.0)) <= 1e-12
    assert kern.validation_errors() == []


def test_uniform_and_random_kernels_are_row_stochastic(grid1d):
    rng = np.random.default_rng(7)
    for kern in (atv.uniform_kernel(grid1d), atv.random_kernel(grid1d, rng)):
        assert np.max(np.abs(kern.row_integrals() - 1.0)) <= 1e-12
        kern.check()


def test_broken_kernel_is_flagged(grid1d):
    kern = atv.uniform_kernel(grid1d)
    bad = atv.TransitionKernel(values=2.0 * kern.values, domain=grid1d)
    assert bad.validation_errors() != []
    with pytest.raises(ValueError):
        bad.check()
    neg = atv.TransitionKernel(values=kern.values.copy(), domain=grid1d)
    neg.values[0] = -neg.values[0]
    assert any("negative" in e for e in neg.validation_errors())


def test_pairing_reduces_to_single_class(grid1d):
    rng = np.random.default_rng(8)
    meas = random_measures(grid1d, rng)
    only0 = atv.ClassMeasures(rho0=meas.rho0, rho1=np.zeros(grid1d.n),
                              nu_weights=meas.nu_weights)
    k0 = atv.random_kernel(grid1d, rng)
    k1 = atv.random_kernel(grid1d, rng)
    rows, _ = pair_rows_cols(grid1d)
    f = atv.pairing((k0, k1), only0)
    assert np.allclose(f.values, k0.values * only0.rho0[rows], atol=1e-15)


def test_pairing_cancels_for_equal_classes(grid1d):
    rng = np.random.default_rng(9)
    kern = atv.random_kernel(grid1d, rng)
    rho = rng.random(grid1d.n)
    meas = atv.ClassMeasures(rho0=rho, rho1=rho, nu_weights=grid1d.quad_weights.copy())
    f = atv.pairing((kern, kern), meas)
    assert np.all(f.values == 0.0)


def test_combined_divergence_splits_by_class(grid2d):
    rng = np.random.default_rng(10)
    for _ in range(50):
        meas = random_measures(grid2d, rng)
        k0 = atv.random_kernel(grid2d, rng)
        k1 = atv.random_kernel(grid2d, rng)
        lhs = atv.nonlocal_divergence_l1(atv.pairing((k0, k1), meas), grid2d)
        rhs = (atv.kernel_divergence(k0, meas.rho0, grid2d)
               - atv.kernel_divergence(k1, meas.rho1, grid2d))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def kernel_divergence_by_singletons(kern, rho, domain):
    """The measure-form divergence evaluated on singletons by python loops.

    Builds the random walk m_x(A) = sum_{j in A} Psi(x,j) w(j) explicitly and
    computes d(y) w(y) = [m_y(domain) rho(y) w(y) - sum_x m_x({y}) rho(x) w(x)] / eps.
    """
    w = domain.quad_weights
    n = domain.n
    rows = np.repeat(np.arange(n), domain.ball_sizes)
    cols = domain.ball_indices
    walk = {}
    for r, c, v in zip(rows, cols, kern.values):
        walk[(int(r), int(c))] = float(v) * w[c]
    out = np.zeros(n)
    for y in range(n):
        m_y_total = sum(v for (r, _), v in walk.items() if r == y)
        incoming = sum(v * rho[r] * w[r] for (r, c), v in walk.items() if c == y)
        out[y] = (m_y_total * rho[y] * w[y] - incoming) / domain.epsilon / w[y]
    return out


def test_measure_form_agrees_with_kernel_divergence(grid1d):
    rng = np.random.default_rng(11)
    kern = atv.random_kernel(grid1d, rng)
    rho = rng.random(grid1d.n)
    fast = atv.kernel_divergence(kern, rho, grid1d)
    slow = kernel_divergence_by_singletons(kern, rho, grid1d)
    assert np.allclose(fast, slow, atol=1e-13)


def gradient_pairing_value(u, kernels, measures, domain):
    g = atv.nonlocal_gradient(u, domain).values
    f = atv.pairing(kernels, measures).values
    rows, cols = pair_rows_cols(domain)
    w = domain.quad_weights
    return float(np.sum(g * f * w[cols] * w[rows]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_integration_by_parts(grid2d, seed):
    rng = np.random.default_rng(seed)
    meas = random_measures(grid2d, rng)
    u = rng.standard_normal(grid2d.n)
    k0 = atv.random_kernel(grid2d, rng)
    k1 = atv.random_kernel(grid2d, rng)
    lhs = gradient_pairing_value(u, (k0, k1), meas, grid2d)
    div = atv.nonlocal_divergence_l1(atv.pairing((k0, k1), meas), grid2d)
    rhs = -float(u @ (div * grid2d.quad_weights))
    assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))


def test_pairfield_shape_is_checked(grid1d):
    with pytest.raises(ValueError):
        PairField(values=np.zeros(3), domain=grid1d)
