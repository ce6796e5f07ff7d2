"""Attained dual side of the adversarial TV: Dirac kernels and subgradients.

TV(u) is a maximum of linear functionals of u indexed by pairs of
row-stochastic kernels supported on the balls: the class-0 kernel pushes
each mass point toward the visible ball maximum of u, the class-1 kernel
toward the minimum, and linear functionals over a weighted simplex are
maximized at vertices — so Dirac rows attain the maximum and

    TV(u) = -sum_y u(y) * div(y) * w(y)

for the divergence of the attained pair.  The negative divergence is then a
subgradient of TV at u, certified through the Fenchel-Young equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import DiscreteDomain
from .measures import ClassMeasures
from .operators import SignedDensity, TransitionKernel, dirac_kernel, kernel_divergence
from .tv import eval_tv

TIE_BREAKS = ("lowest", "highest", "self")


@dataclass(eq=False)
class KernelPair:
    """A dual variable: one transition kernel per class."""

    m0: TransitionKernel
    m1: TransitionKernel

    def __iter__(self):
        yield self.m0
        yield self.m1


def _extremal_targets(u, nu, domain: DiscreteDomain, kind: str, tie_break: str) -> np.ndarray:
    """Index of the visible ball max (kind="max") or min of u, per point.

    Ties go to the lowest member index by default; "highest" flips that and
    "self" prefers the center whenever it attains the optimum (used to
    perturb tie-dependent quantities in tests).  Points whose ball has no
    visible member keep themselves as target.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
    n = domain.n
    vals = u[domain.ball_indices]
    visible = np.asarray(nu)[domain.ball_indices] > 0
    starts = domain.ball_indptr[:-1]
    if kind == "max":
        masked = np.where(visible, vals, -np.inf)
        best = np.maximum.reduceat(masked, starts)
    else:
        masked = np.where(visible, vals, np.inf)
        best = np.minimum.reduceat(masked, starts)
    attained = visible & (masked == best[domain.pair_rows])
    if tie_break == "highest":
        targets = np.maximum.reduceat(np.where(attained, domain.ball_indices, -1), starts)
        blind = targets < 0
    else:
        targets = np.minimum.reduceat(np.where(attained, domain.ball_indices, n), starts)
        blind = targets >= n
    idx = np.arange(n, dtype=np.int64)
    targets = np.where(blind, idx, targets)
    if tie_break == "self":
        nu_arr = np.asarray(nu)
        self_ok = (nu_arr > 0) & (u == best)
        targets = np.where(self_ok, idx, targets)
    return targets


def maximizing_kernels(u, measures: ClassMeasures, domain: DiscreteDomain, tie_break: str = "lowest") -> KernelPair:
    """The attaining Dirac kernel pair at u.

    Row x of m0 is a Dirac at the argmax of u over ball(x) ∩ {nu > 0}; m1
    rows point at the argmin.  Rows of class i at points without rho_i mass
    contribute nothing to any divergence-weighted quantity, so they default
    to the self-Dirac, keeping the kernels sparse and deterministic.
    """
    u = domain.check_field(u, "u")
    idx = np.arange(domain.n, dtype=np.int64)
    t_max = _extremal_targets(u, measures.nu_weights, domain, "max", tie_break)
    t_min = _extremal_targets(u, measures.nu_weights, domain, "min", tie_break)
    t0 = np.where(np.asarray(measures.rho0) > 0, t_max, idx)
    t1 = np.where(np.asarray(measures.rho1) > 0, t_min, idx)
    return KernelPair(m0=dirac_kernel(domain, t0), m1=dirac_kernel(domain, t1))


def _pair_divergence(pair, measures: ClassMeasures, domain: DiscreteDomain) -> SignedDensity:
    m0, m1 = pair
    d0 = kernel_divergence(m0, np.asarray(measures.rho0, dtype=float), domain)
    d1 = kernel_divergence(m1, np.asarray(measures.rho1, dtype=float), domain)
    return d0 - d1


def dual_eval(pair, u, measures: ClassMeasures, domain: DiscreteDomain) -> float:
    """Dual objective -<u, div>_w of a kernel pair; <= TV(u), = at the argmax."""
    u = domain.check_field(u, "u")
    div = _pair_divergence(pair, measures, domain)
    return float(-(u * div * domain.quad_weights).sum())


def duality_gap(u, measures: ClassMeasures, domain: DiscreteDomain, pair=None) -> float:
    """TV(u) minus the dual value of ``pair`` (the maximizing pair if None)."""
    if pair is None:
        pair = maximizing_kernels(u, measures, domain)
    return eval_tv(u, measures, domain) - dual_eval(pair, u, measures, domain)


def subgradient(u, measures: ClassMeasures, domain: DiscreteDomain, tie_break: str = "lowest") -> SignedDensity:
    """A subgradient of TV at u: the negative attained-kernel divergence.

    Satisfies <p, u>_w = TV(u) (Fenchel-Young equality) and <p, v>_w <= TV(v)
    for every v; total mass sum(p * w) is zero by translation invariance.
    """
    pair = maximizing_kernels(u, measures, domain, tie_break=tie_break)
    return -_pair_divergence(pair, measures, domain)


def pushforward_subgradient(u, measures: ClassMeasures, domain: DiscreteDomain, tie_break: str = "lowest") -> SignedDensity:
    """Subgradient via the pushforward ("move every mass point") formula.

    Bins rho0-mass at the ball-argmax map and rho1-mass at the argmin map:

        p = [(Gamma_# rho0) - rho0] / eps + [rho1 - (gamma_# rho1)] / eps,

    densities taken with respect to the quadrature weights.  When the
    argmax/argmin are unique at every mass point this coincides with
    ``subgradient`` exactly; kept as a genuinely different evaluation route
    (scatter/bincount instead of kernel divergences) for cross-checking.
    """
    u = domain.check_field(u, "u")
    w = domain.quad_weights
    t_max = _extremal_targets(u, measures.nu_weights, domain, "max", tie_break)
    t_min = _extremal_targets(u, measures.nu_weights, domain, "min", tie_break)
    rho0 = np.asarray(measures.rho0, dtype=float)
    rho1 = np.asarray(measures.rho1, dtype=float)
    push0 = np.bincount(t_max, weights=rho0 * w, minlength=domain.n) / w
    push1 = np.bincount(t_min, weights=rho1 * w, minlength=domain.n) / w
    return (push0 - rho0) / domain.epsilon + (rho1 - push1) / domain.epsilon


def check_subgradient(p, u, measures: ClassMeasures, domain: DiscreteDomain, n_trials: int = 1000, seed: int = 0) -> float:
    """Worst violation of the subgradient inequality over probe directions.

    Evaluates TV(v) - TV(u) - <p, v - u>_w over ``n_trials`` standard-normal
    fields v plus the deterministic probes v in {0, u, 2u}.  For a true
    subgradient every value is >= 0 (up to rounding); the deterministic
    probes pin the homogeneity ray, where scaled pretenders like
    2*subgradient(u) fail with a violation of -TV(u) at v = 2u.
    """
    u = domain.check_field(u, "u")
    p = domain.check_field(np.asarray(p, dtype=float), "p")
    w = domain.quad_weights
    tv_u = eval_tv(u, measures, domain)
    base = float((p * u * w).sum())

    def violation(v):
        return eval_tv(v, measures, domain) - tv_u - (float((p * v * w).sum()) - base)

    worst = min(violation(np.zeros_like(u)), violation(u), violation(2.0 * u))
    rng = np.random.default_rng(seed)
    for _ in range(int(n_trials)):
        worst = min(worst, violation(rng.standard_normal(domain.n)))
    return worst
