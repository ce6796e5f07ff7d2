"""Class densities and the reference weighting on a discrete domain.

Two nonnegative densities rho0, rho1 (one per class) live on the domain's
points; together they should carry total mass one against the quadrature
weights, sum(rho0 + rho1) * w = 1.  A third array nu_weights is the density
of the reference measure used to decide which points the adversarial
max/min reductions may see: points with nu_weights == 0 are invisible to
the ball extrema.  For the operators to be well behaved every point within
epsilon of the support of rho0 + rho1 must carry positive nu weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .domain import _CDIST_NAMES, DiscreteDomain

MASS_TOL = 1e-9


@dataclass(eq=False)
class ClassMeasures:
    """Densities rho0, rho1 and the reference density nu_weights."""

    rho0: np.ndarray
    rho1: np.ndarray
    nu_weights: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        """Combined density rho0 + rho1."""
        return self.rho0 + self.rho1

    def masses(self, domain: DiscreteDomain):
        w = domain.quad_weights
        return float(self.rho0 @ w), float(self.rho1 @ w)


@dataclass(frozen=True)
class Violation:
    """One validation failure: ``kind`` in {"mass", "negative", "support"}."""

    kind: str
    index: int | None
    message: str

    def __str__(self):  # pragma: no cover - cosmetic
        return self.message


def uniform_measures(domain: DiscreteDomain, weight0: float = 0.5, weight1: float = 0.5) -> ClassMeasures:
    """Spatially uniform densities with class masses weight0/weight1 (sum 1)."""
    volume = float(np.sum(domain.quad_weights))
    rho0 = np.full(domain.n, weight0 / volume)
    rho1 = np.full(domain.n, weight1 / volume)
    return ClassMeasures(rho0=rho0, rho1=rho1, nu_weights=domain.quad_weights.copy())


def _bounding_box(domain: DiscreteDomain):
    if domain.bounds is not None:
        return domain.bounds[:, 0], domain.bounds[:, 1]
    return domain.points.min(axis=0), domain.points.max(axis=0)


def _deposit(samples, domain, bandwidth, per_sample_mass, out, label):
    """Spread each sample's mass onto the domain as a density increment."""
    pts = np.asarray(samples, dtype=float)
    if pts.size == 0:
        return
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != domain.dim:
        raise ValueError(f"{label} samples have dim {pts.shape[1]}, domain has dim {domain.dim}")
    lo, hi = _bounding_box(domain)
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    if not np.all(inside):
        bad = int(np.argmin(inside))
        raise ValueError(
            f"{label} sample {bad} at {pts[bad].tolist()} lies outside the domain box "
            f"[{lo.tolist()}, {hi.tolist()}]"
        )
    w = domain.quad_weights
    dists = cdist(pts, domain.points, _CDIST_NAMES[domain.metric])
    if bandwidth == 0.0:
        nearest = np.argmin(dists, axis=1)  # ties resolve to the lowest index
        np.add.at(out, nearest, per_sample_mass / w[nearest])
    else:
        kern = np.exp(-0.5 * (dists / bandwidth) ** 2)
        norms = (kern * w).sum(axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError(f"bandwidth {bandwidth:g} underflows the smoothing kernel; increase it")
        kern /= norms
        out += per_sample_mass * kern.sum(axis=0)


def from_samples(points0, points1, domain: DiscreteDomain, bandwidth: float = 0.0) -> ClassMeasures:
    """Empirical class densities from labeled sample points.

    Each sample carries mass 1/(total sample count).  With ``bandwidth=0``
    the mass lands on the nearest domain point (in the domain metric, ties
    to the lowest index); with ``bandwidth>0`` it is spread with a Gaussian
    kernel in the domain metric and renormalized against the quadrature
    weights, so per-sample (and hence per-class) mass is conserved either
    way.  Samples outside the domain's bounding box raise with the offending
    sample index.  nu_weights defaults to the quadrature weights, i.e. the
    reference measure sees every point.
    """
    p0 = np.asarray(points0, dtype=float)
    p1 = np.asarray(points1, dtype=float)
    n0 = p0.shape[0] if p0.size else 0
    n1 = p1.shape[0] if p1.size else 0
    total = n0 + n1
    if total == 0:
        raise ValueError("need at least one sample")
    bandwidth = float(bandwidth)
    if bandwidth < 0:
        raise ValueError("bandwidth must be >= 0")
    rho0 = np.zeros(domain.n)
    rho1 = np.zeros(domain.n)
    if n0:
        _deposit(p0, domain, bandwidth, 1.0 / total, rho0, "class-0")
    if n1:
        _deposit(p1, domain, bandwidth, 1.0 / total, rho1, "class-1")
    return ClassMeasures(rho0=rho0, rho1=rho1, nu_weights=domain.quad_weights.copy())


def validate(measures: ClassMeasures, domain: DiscreteDomain):
    """Check the measure invariants; return a list of Violations (empty = ok).

    Checks, in order: nonnegativity of both densities and nu_weights, total
    mass sum((rho0+rho1)*w) == 1 within 1e-9, and the support condition that
    every point within epsilon of supp(rho0+rho1) has positive nu weight.
    """
    out = []
    w = domain.quad_weights
    for name, arr in (("rho0", measures.rho0), ("rho1", measures.rho1), ("nu_weights", measures.nu_weights)):
        arr = np.asarray(arr)
        if arr.shape != (domain.n,):
            out.append(Violation("negative", None, f"{name} has shape {arr.shape}, expected ({domain.n},)"))
            continue
        bad = np.flatnonzero(~(arr >= 0))
        for idx in bad[:16]:
            out.append(Violation("negative", int(idx), f"{name}[{int(idx)}] = {arr[idx]!r} is negative"))
        if bad.size > 16:
            out.append(Violation("negative", None, f"{name}: {bad.size - 16} further negative entries"))
    mass = float((np.asarray(measures.rho0) + np.asarray(measures.rho1)) @ w)
    if abs(mass - 1.0) > MASS_TOL:
        out.append(Violation("mass", None, f"total mass {mass!r} differs from 1 by more than {MASS_TOL:g}"))
    # Support condition: points reachable within epsilon from any mass point
    # must be visible to the reference measure.
    support_rows = np.asarray(measures.rho) > 0
    if support_rows.shape == (domain.n,) and support_rows.any():
        pair_mask = support_rows[domain.pair_rows]
        reached = np.unique(domain.ball_indices[pair_mask])
        nu = np.asarray(measures.nu_weights)
        if nu.shape == (domain.n,):
            dark = reached[~(nu[reached] > 0)]
            for idx in dark[:16]:
                out.append(
                    Violation(
                        "support",
                        int(idx),
                        f"nu_weights[{int(idx)}] = 0 but the point is within epsilon of the class supports",
                    )
                )
            if dark.size > 16:
                out.append(Violation("support", None, f"{dark.size - 16} further dark points near the supports"))
    return out
