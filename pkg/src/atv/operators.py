"""Nonlocal gradient, divergences, and transition kernels on ball adjacency.

Pair quantities f(i, j) are stored flat, aligned with the domain's CSR ball
layout: entry k describes the pair (domain.pair_rows[k],
domain.ball_indices[k]).  Scalar outputs (divergences) are plain float
arrays of length n — densities with respect to the quadrature weights.

Conventions, with w the quadrature weights and eps the interaction radius:

* gradient         g(i, j) = (u(j) - u(i)) / eps                 for j in ball(i)
* L1 divergence    div f (y) = sum_{x in ball(y)} (f(y, x) - f(x, y)) * w(x) / eps
* kernel divergence of a row-stochastic kernel m with density rho:
      d(y) = ( rho(y) * sum_j m(y, j) w(j)
               - sum_{x in ball(y)} m(x, y) rho(x) w(x) ) / eps
  i.e. the L1 divergence of the pair field m(i, j) * rho(i): outflow of
  rho-mass minus inflow, per unit reference mass and per eps.

Row-stochastic here always means with respect to quadrature:
sum_j m(i, j) w(j) = 1, so kernel values are densities in their second slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import DiscreteDomain

#: Scalar fields and signed densities are bare float arrays of length n.
ScalarField = np.ndarray
SignedDensity = np.ndarray

ROW_SUM_TOL = 1e-12


@dataclass(eq=False)
class PairField:
    """A function of ordered point pairs, supported on the ball adjacency."""

    values: np.ndarray
    domain: DiscreteDomain

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.domain.pair_count,):
            raise ValueError(
                f"pair field needs {self.domain.pair_count} values, got shape {self.values.shape}"
            )

    def at(self, i, j):
        """Value(s) at explicit pairs; raises KeyError off the adjacency."""
        return self.values[self.domain.pair_positions(i, j)]


@dataclass(eq=False)
class TransitionKernel(PairField):
    """Row-stochastic pair field: sum_j values(i, j) * w(j) = 1 for every i."""

    def row_integrals(self) -> np.ndarray:
        dom = self.domain
        contrib = self.values * dom.quad_weights[dom.ball_indices]
        return np.add.reduceat(contrib, dom.ball_indptr[:-1])

    def validation_errors(self, tol: float = ROW_SUM_TOL):
        """Human-readable defect list: negativity and row-sum violations."""
        errs = []
        neg = np.flatnonzero(self.values < 0)
        if neg.size:
            k = int(neg[0])
            errs.append(f"negative kernel value at flat pair {k}: {self.values[k]!r}")
        rows = self.row_integrals()
        off = np.flatnonzero(np.abs(rows - 1.0) > tol)
        if off.size:
            i = int(off[0])
            errs.append(f"row {i} integrates to {rows[i]!r}, not 1 (tol {tol:g}; {off.size} rows off)")
        return errs

    def check(self, tol: float = ROW_SUM_TOL):
        errs = self.validation_errors(tol)
        if errs:
            raise ValueError("; ".join(errs))
        return self


def dirac_kernel(domain: DiscreteDomain, targets) -> TransitionKernel:
    """Kernel whose row i is a Dirac at targets[i] (value 1/w(target)).

    Each target must lie in ball(i); KeyError otherwise.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (domain.n,):
        raise ValueError("need one target per point")
    pos = domain.pair_positions(np.arange(domain.n, dtype=np.int64), targets)
    values = np.zeros(domain.pair_count)
    values[pos] = 1.0 / domain.quad_weights[targets]
    return TransitionKernel(values=values, domain=domain)


def uniform_kernel(domain: DiscreteDomain) -> TransitionKernel:
    """Kernel spreading each row uniformly over its ball (in quadrature)."""
    w = domain.quad_weights
    ball_mass = np.add.reduceat(w[domain.ball_indices], domain.ball_indptr[:-1])
    values = 1.0 / ball_mass[domain.pair_rows]
    return TransitionKernel(values=values, domain=domain)


def random_kernel(domain: DiscreteDomain, rng) -> TransitionKernel:
    """Random row-stochastic kernel: i.i.d. exponentials, renormalized per row.

    Exponential spacings make the normalized rows uniform on the weighted
    simplex, so samples exercise the whole feasible set rather than its
    center.
    """
    e = rng.exponential(1.0, size=domain.pair_count)
    wj = domain.quad_weights[domain.ball_indices]
    row_mass = np.add.reduceat(e * wj, domain.ball_indptr[:-1])
    values = e / row_mass[domain.pair_rows]
    return TransitionKernel(values=values, domain=domain)


def nonlocal_gradient(u, domain: DiscreteDomain) -> PairField:
    """Difference quotient g(i, j) = (u(j) - u(i)) / eps on the adjacency."""
    u = domain.check_field(u, "u")
    vals = (u[domain.ball_indices] - u[domain.pair_rows]) / domain.epsilon
    return PairField(values=vals, domain=domain)


def nonlocal_divergence_l1(f: PairField, domain: DiscreteDomain | None = None) -> SignedDensity:
    """Signed divergence density of a pair field.

    div f (y) = sum_{x in ball(y)} (f(y, x) - f(x, y)) * w(x) / eps.  The
    outgoing term is a row reduction; the incoming term gathers the transpose
    through the symmetric adjacency.  Total mass sum(div * w) is zero up to
    rounding since every ordered pair appears once with each sign.
    """
    dom = f.domain if domain is None else domain
    w = dom.quad_weights
    outgoing = np.add.reduceat(f.values * w[dom.ball_indices], dom.ball_indptr[:-1])
    incoming = np.bincount(dom.ball_indices, weights=f.values * w[dom.pair_rows], minlength=dom.n)
    return (outgoing - incoming) / dom.epsilon


def kernel_divergence(m: TransitionKernel, rho, domain: DiscreteDomain | None = None) -> SignedDensity:
    """Divergence of the rho-mass transport described by kernel m.

    Equivalent to ``nonlocal_divergence_l1`` applied to the pair field
    m(i, j) * rho(i); kept as its own entry point because the solver and the
    duality layer reason about kernels, and because for a row-stochastic m
    the outflow term simplifies to rho itself.
    """
    dom = m.domain if domain is None else domain
    rho = dom.check_field(rho, "rho")
    f = PairField(values=m.values * rho[dom.pair_rows], domain=dom)
    return nonlocal_divergence_l1(f, dom)


def pairing(kernels, measures) -> PairField:
    """Signed pair field m0(i, j) rho0(i) - m1(i, j) rho1(i) of a kernel pair.

    ``kernels`` is any (m0, m1) pair, e.g. a duality.KernelPair.  Its L1
    divergence is the difference of the two kernel divergences; that signed
    density drives the primal update in the solver and the subgradient in
    the duality layer.
    """
    m0, m1 = kernels
    dom = m0.domain
    rho0 = dom.check_field(np.asarray(measures.rho0, dtype=float), "rho0")
    rho1 = dom.check_field(np.asarray(measures.rho1, dtype=float), "rho1")
    vals = m0.values * rho0[dom.pair_rows] - m1.values * rho1[dom.pair_rows]
    return PairField(values=vals, domain=dom)
