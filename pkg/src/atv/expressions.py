"""Small closed-form field grammar for the experiment sweeps.

Fields and densities are given as strings over the spatial variables —
``x`` in 1D, ``x, y`` in 2D, ``x, y, z`` in 3D — combining polynomials,
``sin``, ``cos``, ``exp``, the constant ``pi``, and the arithmetic
operators (+, -, *, /, **).  Parsing goes through sympy with a whitelisted
namespace, which also buys exact symbolic derivatives for the study
references (u', Laplacians, div(rho grad u)) instead of hand-maintained
closed forms.
"""

from __future__ import annotations

import re

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

_VARS = (sp.Symbol("x"), sp.Symbol("y"), sp.Symbol("z"))
_ALLOWED_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "pi": sp.pi}

# Lexer-level guard: parse_expr evaluates Python syntax, so every word in the
# source must be whitelisted before it gets anywhere near eval.  Numeric
# literals are stripped first so scientific notation ("2e-3") survives.
_NUM_RE = re.compile(r"(?<![\w.])\d+(?:\.\d*)?(?:[eE][+-]?\d+)?")
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class FieldExpr:
    """A parsed closed-form field over dim spatial variables.

    Callable on an (n, dim) point array (or (n,) in 1D); exposes symbolic
    derivatives for building exact references.
    """

    def __init__(self, expr: sp.Expr, dim: int):
        if not 1 <= dim <= 3:
            raise ValueError("dim must be 1, 2, or 3")
        self.dim = dim
        self.expr = sp.sympify(expr)
        self.variables = _VARS[:dim]
        extra = self.expr.free_symbols - set(self.variables)
        if extra:
            names = ", ".join(sorted(str(s) for s in extra))
            allowed = ", ".join(str(v) for v in self.variables)
            raise ValueError(f"unknown symbols {{{names}}}; a {dim}D field may use {{{allowed}}}")
        self._fn = sp.lambdify(self.variables, self.expr, modules="numpy")

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dim {pts.shape[1]}, expression has dim {self.dim}")
        out = self._fn(*(pts[:, k] for k in range(self.dim)))
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()

    def diff(self, var_index: int = 0) -> "FieldExpr":
        return FieldExpr(sp.diff(self.expr, self.variables[var_index]), self.dim)

    def gradient(self):
        return [self.diff(k) for k in range(self.dim)]

    def laplacian(self) -> "FieldExpr":
        return FieldExpr(sum(sp.diff(self.expr, v, 2) for v in self.variables), self.dim)

    def __repr__(self):  # pragma: no cover - cosmetic
        return f"FieldExpr({self.expr}, dim={self.dim})"


def parse_field(spec: str | FieldExpr, dim: int) -> FieldExpr:
    """Parse an expression string into a FieldExpr (pass-through if parsed).

    Only the spatial variables, sin/cos/exp, pi, numbers, and arithmetic are
    accepted; anything else (names, calls, attributes) is rejected with a
    message naming the offender.
    """
    if isinstance(spec, FieldExpr):
        if spec.dim != dim:
            raise ValueError(f"expression has dim {spec.dim}, expected {dim}")
        return spec
    if not isinstance(spec, str):
        raise TypeError("field spec must be a string or FieldExpr")
    local = {str(v): v for v in _VARS[:dim]}
    local.update(_ALLOWED_FUNCS)
    stray = sorted(set(_WORD_RE.findall(_NUM_RE.sub(" ", spec))) - set(local))
    if stray:
        names = ", ".join(stray)
        raise ValueError(
            f"cannot parse field expression {spec!r}: unknown name(s) {names}; "
            f"allowed are {sorted(local)}"
        )
    try:
        expr = parse_expr(spec, local_dict=local, evaluate=True)
    except Exception as exc:
        raise ValueError(f"cannot parse field expression {spec!r}: {exc}") from exc
    if not isinstance(expr, sp.Basic):
        raise ValueError(f"cannot parse field expression {spec!r}: not a scalar expression")
    allowed_heads = tuple(f for f in _ALLOWED_FUNCS.values() if f is not sp.pi)
    for fn in expr.atoms(sp.Function):
        if not isinstance(fn, allowed_heads):
            raise ValueError(
                f"function {fn.func} is outside the field grammar (sin, cos, exp)"
            )
    return FieldExpr(expr, dim)


def div_rho_grad(u: FieldExpr, rho: FieldExpr) -> FieldExpr:
    """Exact div(rho * grad u) = rho * Laplace(u) + grad(rho) . grad(u)."""
    if u.dim != rho.dim:
        raise ValueError("u and rho must share a dimension")
    expr = rho.expr * u.laplacian().expr
    for v in u.variables:
        expr += sp.diff(rho.expr, v) * sp.diff(u.expr, v)
    return FieldExpr(sp.simplify(expr), u.dim)


def integral_1d(expr: FieldExpr, lo: float, hi: float) -> float:
    """Definite integral of a 1D expression, symbolic with quadrature fallback."""
    if expr.dim != 1:
        raise ValueError("integral_1d needs a 1D expression")
    x = expr.variables[0]
    try:
        val = sp.integrate(expr.expr, (x, lo, hi))
        result = complex(val.evalf())
        if abs(result.imag) > 1e-12:
            raise ValueError
        return float(result.real)
    except Exception:
        from scipy.integrate import quad

        val, _ = quad(lambda t: float(expr._fn(t)), lo, hi, limit=200)
        return float(val)
