"""Shared fixtures and independent brute-force oracles for the test suite."""

import numpy as np
import pytest

import atv


@pytest.fixture
def grid1d():
    """10-point cell-centered grid on (0,1), eps=0.25."""
    return atv.build_grid([(0.0, 1.0)], h=0.1, epsilon=0.25)


@pytest.fixture
def uniform1d(grid1d):
    return atv.uniform_measures(grid1d)


@pytest.fixture
def grid2d():
    return atv.build_grid([(0.0, 1.0), (0.0, 1.0)], h=0.125, epsilon=0.3)


def random_measures(domain, rng, strict_positive=True):
    """Random valid class measures: nonnegative densities, total mass one."""
    lo = 0.05 if strict_positive else 0.0
    a = rng.random(domain.n) + lo
    b = rng.random(domain.n) + lo
    total = (a + b) @ domain.quad_weights
    return atv.ClassMeasures(rho0=a / total, rho1=b / total,
                             nu_weights=domain.quad_weights.copy())


def tv_by_scan(u, measures, domain):
    """Adversarial TV evaluated by a plain per-point python loop.

    Deliberately shares no vectorized machinery with the library: ball
    extrema come from slicing the member list, the visibility rule is
    re-derived from the reference weights, and the accumulation is a
    scalar loop.
    """
    u = np.asarray(u, dtype=float)
    w = domain.quad_weights
    total = 0.0
    for i in range(domain.n):
        members = domain.balls[i]
        visible = members[measures.nu_weights[members] > 0]
        if visible.size:
            hi = u[visible].max()
            lo = u[visible].min()
        else:
            hi = lo = u[i]
        total += (hi - u[i]) * measures.rho0[i] * w[i]
        total += (u[i] - lo) * measures.rho1[i] * w[i]
    return total / domain.epsilon


def risk_by_morphology(indicator, measures, domain):
    """Adversarial risk of a set classifier via explicit dilation/erosion.

    A label-0 point is successfully attacked iff its ball touches the set;
    a label-1 point iff its ball is not contained in the set.
    """
    a = np.asarray(indicator, dtype=bool)
    w = domain.quad_weights
    total = 0.0
    for i in range(domain.n):
        members = domain.balls[i]
        touches = bool(a[members].any())
        inside = bool(a[members].all())
        if touches:
            total += measures.rho0[i] * w[i]
        if not inside:
            total += measures.rho1[i] * w[i]
    return total
