"""Exact algebra of vector fields with bivariate-polynomial coefficients.

Provides the generator action on polynomials, commutators, span tests and
the solvable ordering of two-dimensional algebras, plus prolongation of a
generator to jet space and a numeric check that an ODE surface admits a
generator.  All types are immutable and all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "BivariatePoly",
    "PolyVectorField",
    "Jet",
    "OdeSurface",
    "DependentGeneratorsError",
    "NotSolvableError",
    "OffSurfaceError",
    "apply",
    "commutator",
    "span_coefficients",
    "expand_in_basis",
    "solvable_2d_order",
    "extended_infinitesimal",
    "symmetry_residual",
    "first_order_homogeneous_surface",
    "second_order_example_surface",
]


class DependentGeneratorsError(ValueError):
    """The supplied generators are linearly dependent."""


class NotSolvableError(ValueError):
    """The commutator of the pair lies outside their span."""


class OffSurfaceError(ValueError):
    """A jet handed to ``symmetry_residual`` does not satisfy the ODE."""


@dataclass(frozen=True)
class BivariatePoly:
    """Polynomial in (x, y); ``coeffs`` maps (deg_x, deg_y) to a nonzero
    coefficient.  Zero coefficients are never stored, so equality of the
    mapping is equality of polynomials."""

    coeffs: dict

    @staticmethod
    def from_terms(terms) -> "BivariatePoly":
        clean = {}
        for (i, j), c in dict(terms).items():
            c = float(c)
            if c != 0.0:
                clean[(int(i), int(j))] = c
        return BivariatePoly(clean)

    @classmethod
    def zero(cls) -> "BivariatePoly":
        return cls({})

    @classmethod
    def constant(cls, c: float) -> "BivariatePoly":
        return cls.from_terms({(0, 0): c})

    @classmethod
    def monomial(cls, i: int, j: int, c: float = 1.0) -> "BivariatePoly":
        return cls.from_terms({(i, j): c})

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "BivariatePoly") -> "BivariatePoly":
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            out[key] = out.get(key, 0.0) + c
        return BivariatePoly.from_terms(out)

    def __neg__(self) -> "BivariatePoly":
        return BivariatePoly({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other: "BivariatePoly") -> "BivariatePoly":
        return self + (-other)

    def scale(self, factor: float) -> "BivariatePoly":
        return BivariatePoly.from_terms({k: factor * c for k, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        out: dict = {}
        for (i1, j1), c1 in self.coeffs.items():
            for (i2, j2), c2 in other.coeffs.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return BivariatePoly.from_terms(out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def partial_x(self) -> "BivariatePoly":
        return BivariatePoly.from_terms(
            {(i - 1, j): i * c for (i, j), c in self.coeffs.items() if i > 0}
        )

    def partial_y(self) -> "BivariatePoly":
        return BivariatePoly.from_terms(
            {(i, j - 1): j * c for (i, j), c in self.coeffs.items() if j > 0}
        )

    def __call__(self, x: float, y: float) -> float:
        return sum(c * x**i * y**j for (i, j), c in self.coeffs.items())

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for (i, j) in sorted(self.coeffs, key=lambda k: (k[0] + k[1], k[0], k[1])):
            c = self.coeffs[(i, j)]
            factors = []
            if abs(c) != 1.0 or (i, j) == (0, 0):
                factors.append(f"{abs(c):g}")
            if i:
                factors.append("x" if i == 1 else f"x^{i}")
            if j:
                factors.append("y" if j == 1 else f"y^{j}")
            term = "*".join(factors)
            if not parts:
                parts.append(term if c > 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if c > 0 else f"- {term}")
        return " ".join(parts)


@dataclass(frozen=True)
class PolyVectorField:
    """Generator ``xi(x,y) d/dx + eta(x,y) d/dy`` with polynomial coefficients."""

    xi: BivariatePoly
    eta: BivariatePoly

    @property
    def is_zero(self) -> bool:
        return self.xi.is_zero and self.eta.is_zero

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(self.xi + other.xi, self.eta + other.eta)

    def __sub__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(self.xi - other.xi, self.eta - other.eta)

    def __neg__(self) -> "PolyVectorField":
        return PolyVectorField(-self.xi, -self.eta)

    def scale(self, factor: float) -> "PolyVectorField":
        return PolyVectorField(self.xi.scale(factor), self.eta.scale(factor))

    def __rmul__(self, factor: float) -> "PolyVectorField":
        return self.scale(float(factor))

    def __str__(self) -> str:
        return f"({self.xi}) d/dx + ({self.eta}) d/dy"


def field(xi_terms, eta_terms) -> PolyVectorField:
    """Convenience constructor from two term mappings."""
    return PolyVectorField(BivariatePoly.from_terms(xi_terms), BivariatePoly.from_terms(eta_terms))


def apply(v: PolyVectorField, p: BivariatePoly) -> BivariatePoly:
    """The generator acting on a polynomial: ``xi p_x + eta p_y``, exactly."""
    return v.xi * p.partial_x() + v.eta * p.partial_y()


def commutator(v1: PolyVectorField, v2: PolyVectorField) -> PolyVectorField:
    """Bracket [v1, v2] = (X1 xi2 - X2 xi1) d/dx + (X1 eta2 - X2 eta1) d/dy."""
    return PolyVectorField(
        apply(v1, v2.xi) - apply(v2, v1.xi),
        apply(v1, v2.eta) - apply(v2, v1.eta),
    )


def _stacked(fields: Sequence[PolyVectorField]) -> np.ndarray:
    """Stack coefficient vectors of the fields over the union of monomials."""
    keys = sorted(
        {("xi", m) for f in fields for m in f.xi.coeffs}
        | {("eta", m) for f in fields for m in f.eta.coeffs}
    )
    rows = np.zeros((len(keys), len(fields)))
    for col, f in enumerate(fields):
        for row, (part, m) in enumerate(keys):
            poly = f.xi if part == "xi" else f.eta
            rows[row, col] = poly.coeffs.get(m, 0.0)
    return rows


def expand_in_basis(w: PolyVectorField, basis: Sequence[PolyVectorField], tol: float = 1e-9):
    """Coefficients expressing ``w`` in ``basis``, or None if w is outside
    the span.  Raises DependentGeneratorsError for a rank-deficient basis."""
    stacked = _stacked(list(basis) + [w])
    a, rhs = stacked[:, : len(basis)], stacked[:, -1]
    scale = np.abs(a).max() if a.size else 0.0
    if scale == 0.0 or np.linalg.matrix_rank(a, tol=1e-12 * max(scale, 1.0)) < len(basis):
        raise DependentGeneratorsError("basis generators are linearly dependent")
    coeffs, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    residual = a @ coeffs - rhs
    bound = tol * max(1.0, np.abs(rhs).max(initial=0.0), scale * np.abs(coeffs).max(initial=0.0))
    if np.abs(residual).max(initial=0.0) > bound:
        return None
    return [float(c) for c in coeffs]


def span_coefficients(w: PolyVectorField, v1: PolyVectorField, v2: PolyVectorField):
    """Solve ``w = a v1 + b v2`` coefficient-wise.

    Returns (a, b), or None when ``w`` is outside the span.  The 2x2 pivot
    solve keeps small-integer inputs exact.
    """
    stacked = _stacked([v1, v2, w])
    a, rhs = stacked[:, :2], stacked[:, 2]
    scale = np.abs(a).max() if a.size else 0.0
    if scale == 0.0:
        raise DependentGeneratorsError("both generators are zero")
    # Best-conditioned 2x2 subsystem, solved by Cramer's rule.
    best = (0.0, -1, -1)
    m = a.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            det = a[i, 0] * a[j, 1] - a[i, 1] * a[j, 0]
            if abs(det) > best[0]:
                best = (abs(det), i, j)
    det_abs, i, j = best
    if det_abs <= 1e-12 * scale * scale:
        raise DependentGeneratorsError("generators are linearly dependent")
    det = a[i, 0] * a[j, 1] - a[i, 1] * a[j, 0]
    ca = (rhs[i] * a[j, 1] - rhs[j] * a[i, 1]) / det
    cb = (a[i, 0] * rhs[j] - a[j, 0] * rhs[i]) / det
    residual = a @ np.array([ca, cb]) - rhs
    bound = 1e-9 * max(1.0, np.abs(rhs).max(initial=0.0), scale * max(abs(ca), abs(cb)))
    if np.abs(residual).max(initial=0.0) > bound:
        return None
    return float(ca), float(cb)


def solvable_2d_order(v1: PolyVectorField, v2: PolyVectorField):
    """Order a two-dimensional algebra so that ``[A, B] = lam * A``.

    The first returned generator spans the normal one-dimensional
    sub-algebra.  Raises NotSolvableError when [v1, v2] falls outside
    span{v1, v2} (the pair does not close into an algebra).
    """
    w = commutator(v1, v2)
    if w.is_zero:
        return v1, v2, 0.0
    coeffs = span_coefficients(w, v1, v2)
    if coeffs is None:
        raise NotSolvableError("[v1, v2] is not in span{v1, v2}")
    a, b = coeffs
    if abs(b) < 1e-12:
        return v1, v2, a
    if abs(a) < 1e-12:
        # [v2, v1] = -b v2, so v2 spans the normal sub-algebra.
        return v2, v1, -b
    # w = a v1 + b v2 itself spans the normal sub-algebra: [w, v2] = a w.
    return w, v2, a


@dataclass(frozen=True)
class Jet:
    """Point (x, y, y1, ..., ym) of the prolonged phase space."""

    x: float
    y: float
    derivs: tuple = ()


@dataclass(frozen=True)
class _JetPoly:
    """Polynomial in the jet variables; index 0 is x, 1 is y, k+1 is y_k."""

    nvars: int
    terms: dict  # exponent tuple -> coefficient

    @staticmethod
    def from_terms(nvars: int, terms) -> "_JetPoly":
        clean = {}
        for exps, c in dict(terms).items():
            c = float(c)
            if c != 0.0:
                clean[tuple(exps)] = c
        return _JetPoly(nvars, clean)

    @staticmethod
    def from_bivariate(p: BivariatePoly, nvars: int) -> "_JetPoly":
        pad = (0,) * (nvars - 2)
        return _JetPoly(nvars, {(i, j) + pad: c for (i, j), c in p.coeffs.items()})

    @staticmethod
    def variable(index: int, nvars: int) -> "_JetPoly":
        exps = tuple(1 if k == index else 0 for k in range(nvars))
        return _JetPoly(nvars, {exps: 1.0})

    def __add__(self, other: "_JetPoly") -> "_JetPoly":
        out = dict(self.terms)
        for exps, c in other.terms.items():
            out[exps] = out.get(exps, 0.0) + c
        return _JetPoly.from_terms(self.nvars, out)

    def __sub__(self, other: "_JetPoly") -> "_JetPoly":
        return self + other.scale(-1.0)

    def scale(self, factor: float) -> "_JetPoly":
        return _JetPoly.from_terms(self.nvars, {e: factor * c for e, c in self.terms.items()})

    def __mul__(self, other: "_JetPoly") -> "_JetPoly":
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = out.get(key, 0.0) + c1 * c2
        return _JetPoly.from_terms(self.nvars, out)

    def partial(self, index: int) -> "_JetPoly":
        out = {}
        for exps, c in self.terms.items():
            k = exps[index]
            if k > 0:
                key = exps[:index] + (k - 1,) + exps[index + 1 :]
                out[key] = out.get(key, 0.0) + k * c
        return _JetPoly.from_terms(self.nvars, out)

    def evaluate(self, values: Sequence[float]) -> float:
        total = 0.0
        for exps, c in self.terms.items():
            term = c
            for v, e in zip(values, exps):
                if e:
                    term *= v**e
            total += term
        return total


def _total_derivative(f: _JetPoly) -> _JetPoly:
    """Total x-derivative on jet space: d/dx + y1 d/dy + sum y_{k+1} d/dy_k."""
    out = f.partial(0)
    for index in range(1, f.nvars - 1):
        out = out + _JetPoly.variable(index + 1, f.nvars) * f.partial(index)
    return out


def _prolonged_eta(v: PolyVectorField, order: int) -> _JetPoly:
    """eta^(order) built by the recursion eta^(k) = D_x eta^(k-1) - y_k D_x xi."""
    nvars = order + 2
    xi = _JetPoly.from_bivariate(v.xi, nvars)
    eta = _JetPoly.from_bivariate(v.eta, nvars)
    dxi = _total_derivative(xi)
    current = eta
    for k in range(1, order + 1):
        yk = _JetPoly.variable(k + 1, nvars)
        current = _total_derivative(current) - yk * dxi
    return current


def extended_infinitesimal(v: PolyVectorField, k: int, jet: Jet) -> float:
    """Numeric value of the k-th extended infinitesimal eta^(k) at ``jet``.

    The jet must carry at least k derivatives.
    """
    if k < 1:
        raise ValueError("extension order k must be >= 1")
    if len(jet.derivs) < k:
        raise ValueError(f"jet carries {len(jet.derivs)} derivatives, need {k}")
    poly = _prolonged_eta(v, k)
    return poly.evaluate((jet.x, jet.y) + tuple(jet.derivs[:k]))


@dataclass(frozen=True)
class OdeSurface:
    """An ODE surface F(x, y, y1, ..., ym) = 0 in solved form.

    ``top_derivative(x, y, lower)`` returns y_m on the surface and
    ``gradient(jet)`` returns the analytic partials
    (F_x, F_y, F_{y1}, ..., F_{ym}) at a full jet.
    """

    order: int
    top_derivative: Callable
    gradient: Callable


def symmetry_residual(
    surface: OdeSurface,
    v: PolyVectorField,
    jets: Iterable[Jet],
    on_surface_tol: float = 1e-9,
) -> float:
    """Max over jets of |X^(m) F| with the top derivative substituted from the ODE.

    Jets may carry m-1 derivatives (the top one is filled in from the
    surface) or all m; in the latter case a disagreement beyond
    ``on_surface_tol`` raises OffSurfaceError.
    """
    m = surface.order
    worst = 0.0
    for jet in jets:
        if len(jet.derivs) < m - 1:
            raise ValueError(f"jet carries {len(jet.derivs)} derivatives, need {m - 1}")
        lower = tuple(jet.derivs[: m - 1])
        top = surface.top_derivative(jet.x, jet.y, lower)
        if len(jet.derivs) >= m:
            given = jet.derivs[m - 1]
            if abs(given - top) > on_surface_tol * max(1.0, abs(top)):
                raise OffSurfaceError(
                    f"jet has y_{m} = {given!r} but the surface requires {top!r}"
                )
        full = Jet(jet.x, jet.y, lower + (top,))
        grads = surface.gradient(full)
        value = v.xi(full.x, full.y) * grads[0] + v.eta(full.x, full.y) * grads[1]
        for k in range(1, m + 1):
            value += extended_infinitesimal(v, k, full) * grads[k + 1]
        worst = max(worst, abs(value))
    return worst


def _stencil_derivative(f: Callable[[float], float]) -> Callable[[float], float]:
    """Five-point central difference, used when no analytic derivative is given."""

    def derivative(r: float) -> float:
        h = 7.4e-4 * max(1.0, abs(r))
        return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h)

    return derivative


def first_order_homogeneous_surface(f: Callable[[float], float], fprime=None) -> OdeSurface:
    """Surface y1 - f(y/x) = 0 for the scaling-symmetric first-order family.

    ``fprime`` may supply d f / d r; otherwise a high-order difference
    quotient is used (adequate for the 1e-6 admission threshold).
    """
    df = fprime if fprime is not None else _stencil_derivative(f)

    def top(x, y, lower):
        if x == 0.0:
            raise ZeroDivisionError("surface undefined at x = 0")
        return f(y / x)

    def grad(jet: Jet):
        r = jet.y / jet.x
        d = df(r)
        return (d * jet.y / jet.x**2, -d / jet.x, 1.0)

    return OdeSurface(1, top, grad)


def second_order_example_surface() -> OdeSurface:
    """Surface (x - y) y2 + 2 y1 (y1 + 1) + y1^(3/2) = 0.

    Defined for y1 >= 0 and x != y; the built-in three-generator algebra
    is admitted by this surface.
    """

    def top(x, y, lower):
        (y1,) = lower
        if y1 < 0.0:
            raise ValueError("surface requires y1 >= 0 (fractional power)")
        if x == y:
            raise ZeroDivisionError("surface undefined where x = y")
        return -(2.0 * y1 * (y1 + 1.0) + y1**1.5) / (x - y)

    def grad(jet: Jet):
        y1, y2 = jet.derivs
        return (y2, -y2, 4.0 * y1 + 2.0 + 1.5 * math.sqrt(y1), jet.x - jet.y)

    return OdeSurface(2, top, grad)
