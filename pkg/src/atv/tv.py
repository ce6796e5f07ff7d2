"""The adversarial nonlocal total variation and the classification objective.

For a scalar field u and class densities rho0, rho1 with reference density
nu, the functional is

    TV(u) = (1/eps) * sum_x [ (max_{ball(x) ∩ {nu>0}} u - u(x)) rho0(x)
                            + (u(x) - min_{ball(x) ∩ {nu>0}} u) rho1(x) ] w(x).

Points with nu == 0 are invisible to the ball extrema (the discrete essential
sup/inf); a ball with no visible member falls back to u(x) itself, i.e.
contributes nothing.  The classification objective adds the linear data term

    J(u) = sum_x [ rho0(x) u(x) + rho1(x) (1 - u(x)) ] w(x) + lam * TV(u)

over the box 0 <= u <= 1.  For indicator fields and lam = eps the objective
collapses to the exact adversarial risk of the underlying set — dilation
mass of class 0 plus co-erosion mass of class 1 — which is what
``adversarial_risk_set`` computes directly (no nu involved: the attack may
move a point anywhere in its ball).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .domain import DiscreteDomain
from .measures import ClassMeasures

BOX_TOL = 1e-12

#: At most this many distinct values gets the exact level-gap coarea path.
COAREA_EXACT_LIMIT = 4096
COAREA_DEFAULT_THRESHOLDS = 512


def masked_ball_extrema(u, nu, domain: DiscreteDomain):
    """Per-point (max, min) of u over ball members with positive nu weight.

    Rows whose ball carries no visible member return u(x) for both, so the
    differences (max - u) and (u - min) vanish there.
    """
    vals = u[domain.ball_indices]
    visible = np.asarray(nu)[domain.ball_indices] > 0
    starts = domain.ball_indptr[:-1]
    vmax = np.maximum.reduceat(np.where(visible, vals, -np.inf), starts)
    vmin = np.minimum.reduceat(np.where(visible, vals, np.inf), starts)
    blind = ~np.isfinite(vmax)
    if blind.any():
        vmax = np.where(blind, u, vmax)
        vmin = np.where(blind, u, vmin)
    return vmax, vmin


def eval_tv(u, measures: ClassMeasures, domain: DiscreteDomain) -> float:
    """Evaluate the adversarial TV functional at u."""
    u = domain.check_field(u, "u")
    w = domain.quad_weights
    vmax, vmin = masked_ball_extrema(u, measures.nu_weights, domain)
    up = (vmax - u) * (np.asarray(measures.rho0) * w)
    down = (u - vmin) * (np.asarray(measures.rho1) * w)
    return float((up.sum() + down.sum()) / domain.epsilon)


def eval_objective(u, measures: ClassMeasures, domain: DiscreteDomain, lam: float | None = None) -> float:
    """Data term plus lam * TV(u); lam defaults to the domain's epsilon.

    u must lie in the box [0, 1] (up to 1e-12 slack); values outside raise,
    since the objective's derivation (layer cake over set classifiers) only
    covers the box.
    """
    u = domain.check_field(u, "u")
    if u.min() < -BOX_TOL or u.max() > 1.0 + BOX_TOL:
        raise ValueError(f"u must lie in [0, 1]; got range [{u.min()!r}, {u.max()!r}]")
    lam = domain.epsilon if lam is None else float(lam)
    w = domain.quad_weights
    data = float(((np.asarray(measures.rho0) * u + np.asarray(measures.rho1) * (1.0 - u)) * w).sum())
    return data + lam * eval_tv(u, measures, domain)


def _as_indicator(A, domain: DiscreteDomain) -> np.ndarray:
    arr = np.asarray(A)
    if arr.shape != (domain.n,):
        raise ValueError(f"A must be an indicator of shape ({domain.n},), got {arr.shape}")
    if arr.dtype == bool:
        return arr
    flt = arr.astype(float)
    if not np.all((flt == 0.0) | (flt == 1.0)):
        raise ValueError("A must be a 0/1 indicator field or boolean mask")
    return flt == 1.0


def adversarial_risk_set(A, measures: ClassMeasures, domain: DiscreteDomain) -> float:
    """Exact adversarial 0-1 risk of the set classifier 1_A.

    Class-0 mass at points whose ball touches A (the adversary can push the
    point into A) plus class-1 mass at points whose ball is not contained in
    A (the adversary can push it out).  Balls here are the full metric balls
    — the attacker is not constrained by the reference measure.
    """
    ind = _as_indicator(A, domain)
    member = ind[domain.ball_indices]
    starts = domain.ball_indptr[:-1]
    touches = np.logical_or.reduceat(member, starts)
    inside = np.logical_and.reduceat(member, starts)
    w = domain.quad_weights
    risk0 = float((np.asarray(measures.rho0) * w)[touches].sum())
    risk1 = float((np.asarray(measures.rho1) * w)[~inside].sum())
    return risk0 + risk1


class CoareaResult(NamedTuple):
    lhs: float
    rhs: float
    abs_err: float


def coarea_check(u, measures: ClassMeasures, domain: DiscreteDomain, n_thresholds: int | None = None) -> CoareaResult:
    """Compare TV(u) with the layered integral of level-set TVs.

    lhs = TV(u); rhs = integral over t in (0, 1) of TV(1_{u > t}).  With
    ``n_thresholds=None`` the integral is evaluated exactly by summing over
    the gaps between distinct values of u whenever u takes at most 4096
    distinct values (midpoint quadrature with 512 levels otherwise); passing
    an integer forces midpoint quadrature with that many levels.

    u is expected in [0, 1]; fields outside the box are affinely rescaled
    first (TV is positively homogeneous and translation invariant, so the
    check is equivalent), and the returned lhs refers to the rescaled field.
    """
    u = domain.check_field(u, "u")
    lo, hi = float(u.min()), float(u.max())
    if lo < 0.0 or hi > 1.0:
        u = (u - lo) / (hi - lo) if hi > lo else np.zeros_like(u)
    lhs = eval_tv(u, measures, domain)

    def level_tv(t):
        return eval_tv((u > t).astype(float), measures, domain)

    if n_thresholds is None:
        values = np.unique(u)
        if values.size <= COAREA_EXACT_LIMIT:
            # sum of gap * TV(superlevel) over the distinct-value ladder;
            # levels below min(u) or at/above max(u) contribute zero TV.
            rhs = 0.0
            for vk, vk1 in zip(values[:-1], values[1:]):
                rhs += (vk1 - vk) * level_tv(vk)
            return CoareaResult(lhs, rhs, abs(lhs - rhs))
        n_thresholds = COAREA_DEFAULT_THRESHOLDS
    n_thresholds = int(n_thresholds)
    if n_thresholds < 1:
        raise ValueError("n_thresholds must be >= 1")
    ts = (np.arange(n_thresholds) + 0.5) / n_thresholds
    rhs = float(sum(level_tv(t) for t in ts) / n_thresholds)
    return CoareaResult(lhs, rhs, abs(lhs - rhs))
