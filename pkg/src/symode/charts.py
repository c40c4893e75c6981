"""Canonical coordinate charts and reduced right-hand sides.

Two ODE families are built in: the scaling-symmetric first-order family
dy/dx = F(y/x) on [x0, xT], and the second-order example
(x - y) y'' + 2 y' (y' + 1) + (y')^(3/2) = 0.  Each family carries its
canonical chart (r, s), the envelope encoding the x-domain, its admitted
generators, and the reduced equation ds/dr = G(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

from . import expr as expr_mod
from .lie import (
    BivariatePoly,
    OdeSurface,
    PolyVectorField,
    first_order_homogeneous_surface,
    second_order_example_surface,
)

__all__ = [
    "CanonicalChart",
    "ReducedIntegrand",
    "FirstOrderFamily",
    "SecondOrderFamily",
    "ChartDomainError",
    "SingularReductionError",
    "NoRealSolutionError",
    "BlowUpError",
    "InformationError",
    "chart_first_order",
    "chart_second_order",
    "reduced_rhs_first_order",
    "integration_constant_second_order",
    "reduced_rhs_second_order",
    "information_first_order",
    "information_second_order",
]

# Absolute floor for denominators before a reduction is declared singular.
SINGULAR_TOL = 1e-12


class ChartDomainError(ValueError):
    """A chart map was evaluated outside its domain."""


class SingularReductionError(ArithmeticError):
    """The reduced right-hand side hit the invariant-solution singularity."""

    def __init__(self, r: float, denominator: float):
        self.r = r
        self.denominator = denominator
        super().__init__(
            f"singular reduction at r = {r!r}: denominator {denominator!r} within {SINGULAR_TOL}"
        )


class NoRealSolutionError(ArithmeticError):
    """K(r) < 2: the transcendental relation for the slope has no real root."""

    def __init__(self, r: float, k: float):
        self.r = r
        self.k = k
        super().__init__(f"no real slope at r = {r!r}: K = {k!r} < 2")


class BlowUpError(ArithmeticError):
    """K(r) at the double root: the reduced slope diverges."""

    def __init__(self, r: float):
        self.r = r
        super().__init__(f"reduced slope blows up at r = {r!r} (K at the double root)")


class InformationError(RuntimeError):
    """A design point could not be evaluated; carries the offending index."""

    def __init__(self, index: int, r: float, cause: Exception):
        self.index = index
        self.r = r
        self.cause = cause
        super().__init__(f"design point {index} (r = {r!r}) failed: {cause}")


@dataclass(frozen=True)
class CanonicalChart:
    """Coordinates (r, s) in which the group action is s -> s + eps.

    ``forward`` maps (x, y) to (r, s) and ``inverse`` maps back; the
    envelope s_lower(r) <= s <= s_upper(r) encodes x0 <= x <= xT, and any
    curve with ds/dr > slope_floor(r) pushes forward to a strictly
    monotone x(r) (the sign of dx/dr is ``monotone_sign``).
    """

    forward: Callable[[float, float], tuple]
    inverse: Callable[[float, float], tuple]
    s_lower: Callable[[float], float]
    s_upper: Callable[[float], float]
    slope_floor: Callable[[float], float]
    monotone_sign: int = 1


@dataclass(frozen=True)
class ReducedIntegrand:
    """The reduced right-hand side G in ds/dr = G(r)."""

    g: Callable[[float], float]

    def __call__(self, r: float) -> float:
        return self.g(r)


def _as_callable(f) -> Callable[[float], float]:
    if isinstance(f, expr_mod.Expression):
        return lambda r: expr_mod.evaluate(f, r)
    return f


def chart_first_order(x_t: float, x0: float = 1.0) -> CanonicalChart:
    """Chart for dy/dx = F(y/x): r = y/x, s = log y.

    The envelope is log r + log x0 <= s <= log r + log xT and the
    push-forward is monotone when ds/dr > 1/r.  Requires y > 0 and r > 0.
    """
    if not (0.0 < x0 < x_t):
        raise ChartDomainError(f"need 0 < x0 < xT, got x0 = {x0!r}, xT = {x_t!r}")
    log_x0 = math.log(x0)
    log_xt = math.log(x_t)

    def forward(x: float, y: float):
        if y <= 0.0:
            raise ChartDomainError(f"first-order chart requires y > 0, got y = {y!r}")
        if x <= 0.0:
            raise ChartDomainError(f"first-order chart requires x > 0, got x = {x!r}")
        return y / x, math.log(y)

    def inverse(r: float, s: float):
        if r <= 0.0:
            raise ChartDomainError(f"first-order chart requires r > 0, got r = {r!r}")
        y = math.exp(s)
        return y / r, y

    return CanonicalChart(
        forward=forward,
        inverse=inverse,
        s_lower=lambda r: math.log(r) + log_x0,
        s_upper=lambda r: math.log(r) + log_xt,
        slope_floor=lambda r: 1.0 / r,
    )


def chart_second_order(x0: float, x_t: float) -> CanonicalChart:
    """Chart for the second-order example: r = 1/y - 1/x, s = -1/y.

    The envelope is -1/x0 - r <= s <= -1/xT - r and the push-forward is
    monotone when ds/dr > -1.
    """
    if not (0.0 < x0 < x_t):
        raise ChartDomainError(f"need 0 < x0 < xT, got x0 = {x0!r}, xT = {x_t!r}")

    def forward(x: float, y: float):
        if x == 0.0 or y == 0.0:
            raise ChartDomainError(f"second-order chart undefined at x = {x!r}, y = {y!r}")
        return 1.0 / y - 1.0 / x, -1.0 / y

    def inverse(r: float, s: float):
        if s == 0.0:
            raise ChartDomainError("second-order chart inverse undefined at s = 0")
        if s + r == 0.0:
            raise ChartDomainError(f"second-order chart inverse undefined at s + r = 0 (r = {r!r})")
        return -1.0 / (s + r), -1.0 / s

    return CanonicalChart(
        forward=forward,
        inverse=inverse,
        s_lower=lambda r: -1.0 / x0 - r,
        s_upper=lambda r: -1.0 / x_t - r,
        slope_floor=lambda r: -1.0,
    )


def reduced_rhs_first_order(f: Union[expr_mod.Expression, Callable]) -> ReducedIntegrand:
    """G(r) = F(r) / (-r^2 + r F(r)) for dy/dx = F(y/x).

    The denominator vanishes identically on the invariant solution curve of
    the scaling symmetry (F(r) = r); values within SINGULAR_TOL of zero
    raise SingularReductionError.
    """
    fc = _as_callable(f)

    def g(r: float) -> float:
        fr = fc(r)
        denominator = r * fr - r * r
        if abs(denominator) < SINGULAR_TOL:
            raise SingularReductionError(r, denominator)
        return fr / denominator

    return ReducedIntegrand(g)


def integration_constant_second_order(x0: float, y0: float, y0_prime: float):
    """Constant of the inner reduction, fixed by the initial data.

    Returns (C, branch) with branch +1 when x0/y0 >= 0 and -1 otherwise.
    Uses w0 = y0' (x0/y0)^2 and v0 = 1/y0 - 1/x0; the relation is evaluated
    with log|v0|, the sign being absorbed into C.  Requires w0 > 0 and
    v0 != 0.
    """
    if y0 == 0.0 or x0 == 0.0:
        raise ChartDomainError("initial point must have nonzero x0 and y0")
    w0 = y0_prime * (x0 / y0) ** 2
    if w0 <= 0.0:
        raise ChartDomainError(f"initial data give w0 = {w0!r}; the reduction requires w0 > 0")
    v0 = 1.0 / y0 - 1.0 / x0
    if abs(v0) < SINGULAR_TOL:
        raise ChartDomainError("initial point lies on the invariant curve v = 1/y - 1/x = 0")
    branch = 1 if x0 / y0 >= 0.0 else -1
    c = -math.log(abs(v0)) + math.log(2.0 * w0 + branch * math.sqrt(w0) + 2.0) - 0.5 * math.log(w0)
    return c, branch


def reduced_rhs_second_order(c: float, branch: int) -> ReducedIntegrand:
    """G(r) for the second-order example via K(r) = (|r| -/+ e^-C) / (2 e^-C).

    Solves p + 1/p = K for the root p in (0, 1) and returns
    u = p^2 / (1 - p^2), which automatically satisfies the monotonicity
    condition u > -1.  K < 2 raises NoRealSolutionError; K at the double
    root (p -> 1, u -> infinity) raises BlowUpError.
    """
    if branch not in (1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch!r}")
    em = math.exp(-c)

    def g(r: float) -> float:
        k = (abs(r) - branch * em) / (2.0 * em)
        if k < 2.0:
            raise NoRealSolutionError(r, k)
        if k < 2.0 + SINGULAR_TOL:
            raise BlowUpError(r)
        p = (k - math.sqrt(k * k - 4.0)) / 2.0
        return p * p / (1.0 - p * p)

    return ReducedIntegrand(g)


def _gather(integrand: ReducedIntegrand, design) -> list:
    values = []
    for index, r in enumerate(design):
        try:
            values.append((float(r), integrand(float(r))))
        except (ArithmeticError, expr_mod.EvalDomainError) as cause:
            raise InformationError(index, float(r), cause) from cause
    return values


def information_first_order(f, design) -> list:
    """Evaluate the first-order G at each design point; returns (r, G(r)) pairs."""
    return _gather(reduced_rhs_first_order(f), design)


def information_second_order(c: float, branch: int, design) -> list:
    """Evaluate the second-order G at each design point; returns (r, G(r)) pairs."""
    return _gather(reduced_rhs_second_order(c, branch), design)


def _scaling_generator() -> PolyVectorField:
    return PolyVectorField(BivariatePoly.monomial(1, 0), BivariatePoly.monomial(0, 1))


def _second_order_generators() -> list:
    return [
        PolyVectorField(BivariatePoly.monomial(2, 0), BivariatePoly.monomial(0, 2)),
        PolyVectorField(BivariatePoly.monomial(1, 0), BivariatePoly.monomial(0, 1)),
        PolyVectorField(BivariatePoly.monomial(0, 0), BivariatePoly.monomial(0, 0)),
    ]


@dataclass(frozen=True)
class FirstOrderFamily:
    """dy/dx = F(y/x), y(x0) = y0, solved over x in [x0, xT].

    The prior parametrisation is s(r) = log r + log x0 + zeta_scale * zeta(r)
    with zeta_scale = log(xT/x0), so zeta = 0 and zeta = 1 trace the
    envelope.
    """

    gradient: Union[expr_mod.Expression, Callable]
    x_t: float
    y0: float
    x0: float = 1.0

    def chart(self) -> CanonicalChart:
        return chart_first_order(self.x_t, self.x0)

    def generators(self) -> list:
        return [_scaling_generator()]

    def surface(self, fprime=None) -> OdeSurface:
        return first_order_homogeneous_surface(_as_callable(self.gradient), fprime)

    def reduced_rhs(self) -> ReducedIntegrand:
        return reduced_rhs_first_order(self.gradient)

    def information(self, design) -> list:
        return information_first_order(self.gradient, design)

    @property
    def initial_r(self) -> float:
        return self.y0 / self.x0

    @property
    def zeta_scale(self) -> float:
        return math.log(self.x_t / self.x0)

    def s_of(self, r: float, zeta_value: float) -> float:
        return math.log(r) + math.log(self.x0) + self.zeta_scale * zeta_value

    def slope_target(self, r: float, g_value: float) -> float:
        """Invert ds/dr = 1/r + zeta_scale * zeta' for the data value zeta'(r)."""
        return (g_value - 1.0 / r) / self.zeta_scale


@dataclass(frozen=True)
class SecondOrderFamily:
    """(x - y) y'' + 2 y' (y' + 1) + (y')^(3/2) = 0 with y(x0) = y0, y'(x0) = y0'.

    The prior parametrisation is s(r) = -1/x0 - r + zeta_scale * zeta(r)
    with zeta_scale = 1/x0 - 1/xT.  The reduction branch is frozen from the
    initial condition.
    """

    x0: float
    x_t: float
    y0: float
    y0_prime: float

    def chart(self) -> CanonicalChart:
        return chart_second_order(self.x0, self.x_t)

    def generators(self) -> list:
        return _second_order_generators()

    def surface(self) -> OdeSurface:
        return second_order_example_surface()

    def constants(self):
        return integration_constant_second_order(self.x0, self.y0, self.y0_prime)

    def reduced_rhs(self) -> ReducedIntegrand:
        c, branch = self.constants()
        return reduced_rhs_second_order(c, branch)

    def information(self, design) -> list:
        c, branch = self.constants()
        return information_second_order(c, branch, design)

    @property
    def initial_r(self) -> float:
        return 1.0 / self.y0 - 1.0 / self.x0

    @property
    def zeta_scale(self) -> float:
        return 1.0 / self.x0 - 1.0 / self.x_t

    def s_of(self, r: float, zeta_value: float) -> float:
        return -1.0 / self.x0 - r + self.zeta_scale * zeta_value

    def slope_target(self, r: float, g_value: float) -> float:
        """Invert ds/dr = -1 + zeta_scale * zeta' for the data value zeta'(r)."""
        return (g_value + 1.0) / self.zeta_scale


OdeFamily = Union[FirstOrderFamily, SecondOrderFamily]
