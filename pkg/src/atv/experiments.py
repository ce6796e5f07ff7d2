"""Reproducible limit studies: operator consistency and the TV epsilon-limit.

Both studies follow the two-scale protocol: the grid spacing is tied to the
interaction radius (h = epsilon/10 by default) so that quadrature error
refines together with epsilon and the continuum limit is what the ladder
actually probes.  Fields and densities come in through the closed-form
expression grammar (:mod:`atv.expressions`), which also supplies the exact
symbolic references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import build_grid, interior_mask
from .expressions import FieldExpr, div_rho_grad, integral_1d, parse_field
from .measures import ClassMeasures
from .tv import eval_tv

SWEEP_HEADER = ("epsilon", "h", "observed", "reference", "abs_err", "rel_err")


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    h: float
    observed: float
    reference: float
    abs_err: float
    rel_err: float


@dataclass(eq=False)
class SweepResult:
    """Ladder rows plus the instance description that produced them."""

    rows: list
    metadata: dict = field(default_factory=dict)

    def table(self):
        """Rectangular table (header first) for report.write_csv."""
        out = [list(SWEEP_HEADER)]
        for r in self.rows:
            out.append([r.epsilon, r.h, r.observed, r.reference, r.abs_err, r.rel_err])
        return out

    def sup_errors(self) -> np.ndarray:
        return np.array([r.abs_err for r in self.rows])


def _row(epsilon, h, observed, reference) -> SweepRow:
    abs_err = abs(observed - reference)
    rel_err = abs_err / abs(reference) if reference != 0.0 else abs_err
    return SweepRow(float(epsilon), float(h), float(observed), float(reference), float(abs_err), float(rel_err))


def cn_constant(N: int) -> float:
    """Moment constant of the unit ball: integral of z_1^2 over B_1 in R^N.

    Closed form 2*pi^(N/2) / ((N+2) * Gamma(N/2) * N); this is the constant
    that scales the nonlocal operator toward div(rho grad u).
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    N = int(N)
    return 2.0 * math.pi ** (N / 2.0) / ((N + 2) * math.gamma(N / 2.0) * N)


def nonlocal_diffusion(u_vals, rho_vals, domain):
    """Moment-normalized nonlocal diffusion values, one per point.

    Evaluates sum_{x in ball(y)} (u(x) - u(y)) (rho(x) + rho(y)) w(x),
    divided by the discrete second ball moment M2(y) = (1/N) sum |x-y|^2 w(x).
    On symmetric interior balls every odd Taylor term cancels, so the value
    approaches div(rho grad u)(y); normalizing by the discrete moment rather
    than its continuum limit C_N eps^(N+2) removes the half-cell quadrature
    bias of the ball sum, which would otherwise dominate at fixed eps/h.
    """
    rows, cols = domain.pair_rows, domain.ball_indices
    starts = domain.ball_indptr[:-1]
    wj = domain.quad_weights[cols]
    u_vals = domain.check_field(u_vals, "u")
    rho_vals = domain.check_field(rho_vals, "rho")
    pair_vals = (u_vals[cols] - u_vals[rows]) * (rho_vals[cols] + rho_vals[rows]) * wj
    numer = np.add.reduceat(pair_vals, starts)
    sq = ((domain.points[cols] - domain.points[rows]) ** 2).sum(axis=1)
    m2 = np.add.reduceat(sq * wj, starts) / domain.dim
    return numer / m2


def consistency_study(u, rho, bounds, epsilons, h_over_eps: float = 0.1, metric: str = "euclidean") -> SweepResult:
    """Sup-norm error of the nonlocal diffusion against div(rho grad u).

    For each epsilon in the ladder a fresh grid with h = epsilon * h_over_eps
    is built over ``bounds``, the moment-normalized operator is evaluated,
    and the sup-norm error over the interior mask (points farther than
    epsilon from the boundary, where the symmetric-ball cancellation holds)
    is recorded.  Each row stores the observed/reference values at the
    worst point, so abs_err is recomputable from the columns.
    """
    dim = len(np.atleast_2d(np.asarray(bounds, dtype=float)))
    u_expr = parse_field(u, dim)
    rho_expr = parse_field(rho, dim)
    reference_expr = div_rho_grad(u_expr, rho_expr)
    rows = []
    effective_constants = []
    for eps in epsilons:
        eps = float(eps)
        dom = build_grid(bounds, h=eps * h_over_eps, metric=metric, epsilon=eps)
        mask = interior_mask(dom)
        if mask.count == 0:
            raise ValueError(f"epsilon={eps:g} too large for domain: interior mask is empty")
        u_vals = u_expr(dom.points)
        rho_vals = rho_expr(dom.points)
        if not np.all(rho_vals > 0):
            raise ValueError("rho must be strictly positive on the grid")
        observed = nonlocal_diffusion(u_vals, rho_vals, dom)
        reference = reference_expr(dom.points)
        idx = mask.indices
        worst = idx[np.argmax(np.abs(observed[idx] - reference[idx]))]
        rows.append(_row(eps, dom.spacing, observed[worst], reference[worst]))
        wj = dom.quad_weights[dom.ball_indices]
        sq = ((dom.points[dom.ball_indices] - dom.points[dom.pair_rows]) ** 2).sum(axis=1)
        m2 = np.add.reduceat(sq * wj, dom.ball_indptr[:-1]) / dom.dim
        effective_constants.append(float(np.median(m2[idx]) / eps ** (dom.dim + 2)))
    meta = {
        "study": "consistency",
        "u": str(u_expr.expr),
        "rho": str(rho_expr.expr),
        "bounds": np.atleast_2d(np.asarray(bounds, dtype=float)).tolist(),
        "metric": metric,
        "h_over_eps": float(h_over_eps),
        "error_norm": "sup over interior mask",
        "cn_continuum": cn_constant(dim),
        "cn_effective": effective_constants,
    }
    return SweepResult(rows=rows, metadata=meta)


def gamma_limit_study(u, rho0, rho1, bounds, epsilons, h_over_eps: float = 0.1) -> SweepResult:
    """TV_eps of a monotone 1D field against the weighted local TV.

    The reference is the exact integral of (rho0 + rho1) |u'| over the
    domain; TV_eps approaches it from below as the interaction radius
    shrinks (the ball sup saturates near the boundary, an O(epsilon)
    boundary layer).  Non-monotone u is rejected: the study leans on the
    pointwise ball-extremum form of the limit, which needs a single sign
    of u'.
    """
    bnds = np.atleast_2d(np.asarray(bounds, dtype=float))
    if bnds.shape[0] != 1:
        raise ValueError("gamma_limit_study is 1D only")
    lo, hi = float(bnds[0, 0]), float(bnds[0, 1])
    u_expr = parse_field(u, 1)
    rho0_expr = parse_field(rho0, 1)
    rho1_expr = parse_field(rho1, 1)
    du = u_expr.diff(0)
    probe = np.linspace(lo, hi, 2049)
    slopes = du(probe)
    if np.any(slopes > 0) and np.any(slopes < 0):
        raise ValueError(f"u={u_expr.expr} is not monotone on ({lo:g}, {hi:g})")
    sign = -1.0 if np.any(slopes < 0) else 1.0
    total_expr = FieldExpr((rho0_expr.expr + rho1_expr.expr) * du.expr, 1)
    reference = sign * integral_1d(total_expr, lo, hi)
    rows = []
    for eps in epsilons:
        eps = float(eps)
        dom = build_grid(bounds, h=eps * h_over_eps, metric="euclidean", epsilon=eps)
        u_vals = u_expr(dom.points)
        r0 = rho0_expr(dom.points)
        r1 = rho1_expr(dom.points)
        if np.any(r0 < 0) or np.any(r1 < 0):
            raise ValueError("densities must be nonnegative on the grid")
        meas = ClassMeasures(rho0=r0, rho1=r1, nu_weights=dom.quad_weights.copy())
        observed = eval_tv(u_vals, meas, dom)
        rows.append(_row(eps, dom.spacing, observed, reference))
    meta = {
        "study": "gamma_limit",
        "u": str(u_expr.expr),
        "rho0": str(rho0_expr.expr),
        "rho1": str(rho1_expr.expr),
        "bounds": bnds.tolist(),
        "h_over_eps": float(h_over_eps),
        "reference": "integral of (rho0+rho1)|u'| over the domain",
    }
    return SweepResult(rows=rows, metadata=meta)
