"""Constrained basis prior: hat functions and the monotone coefficient cone.

A curve zeta(r) = sum_j z_j phi_j(r) over equally spaced hats, with
coefficients restricted to Z = {0 < z_1 <= ... <= z_N <= 1}, is monotone,
bounded by one, and anchored; the family map s_from_zeta turns it into a
transformed-solution curve between the envelope bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "HatBasis",
    "InfeasibleCoefficientsError",
    "phi",
    "phi_prime",
    "zeta",
    "zeta_prime",
    "values_matrix",
    "slopes_matrix",
    "is_feasible",
    "feasible_within",
    "s_from_zeta",
]


class InfeasibleCoefficientsError(ValueError):
    """Coefficients outside the monotone-bounded cone."""


@dataclass(frozen=True)
class HatBasis:
    """Equally spaced hat functions: knot j sits at start + j * spacing.

    Indices are 0-based; knot spacing is exact by construction.
    """

    start: float
    spacing: float
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"basis needs at least 2 knots, got {self.size}")
        if not self.spacing > 0.0:
            raise ValueError(f"knot spacing must be positive, got {self.spacing!r}")

    @property
    def knots(self) -> np.ndarray:
        return self.start + self.spacing * np.arange(self.size)

    def knot(self, j: int) -> float:
        return self.start + self.spacing * j

    @property
    def hi(self) -> float:
        return self.knot(self.size - 1)


def _check_index(basis: HatBasis, j: int) -> None:
    if not 0 <= j < basis.size:
        raise IndexError(f"hat index {j} outside [0, {basis.size - 1}]")


def phi(basis: HatBasis, j: int, r: float) -> float:
    """Hat function j: 1 - |r - t_j| / h on its support, 0 elsewhere."""
    _check_index(basis, j)
    u = abs(r - basis.knot(j)) / basis.spacing
    return 1.0 - u if u < 1.0 else 0.0


def phi_prime(basis: HatBasis, j: int, r: float) -> float:
    """Right-derivative of hat j: +1/h on the rising half, -1/h on the falling."""
    _check_index(basis, j)
    t = basis.knot(j)
    h = basis.spacing
    if t - h <= r < t:
        return 1.0 / h
    if t <= r < t + h:
        return -1.0 / h
    return 0.0


def _check_coeffs(basis: HatBasis, z: Sequence[float]) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (basis.size,):
        raise ValueError(f"coefficient vector has shape {z.shape}, expected ({basis.size},)")
    return z


def zeta(basis: HatBasis, z: Sequence[float], r: float) -> float:
    """The basis curve sum_j z_j phi_j(r); interpolates z_j at the knots."""
    z = _check_coeffs(basis, z)
    return float(sum(z[j] * phi(basis, j, r) for j in _active(basis, r)))


def zeta_prime(basis: HatBasis, z: Sequence[float], r: float) -> float:
    """Right-derivative of the basis curve at r."""
    z = _check_coeffs(basis, z)
    return float(sum(z[j] * phi_prime(basis, j, r) for j in _active(basis, r)))


def _active(basis: HatBasis, r: float):
    """Indices of the (at most two) hats whose support contains r."""
    lo = int(np.floor((r - basis.start) / basis.spacing)) - 1
    return range(max(lo, 0), min(lo + 3, basis.size))


def values_matrix(basis: HatBasis, points: Sequence[float]) -> np.ndarray:
    """Matrix with entries phi_j(r_i), one row per point."""
    points = np.asarray(points, dtype=float)
    out = np.zeros((points.size, basis.size))
    for i, r in enumerate(points):
        for j in _active(basis, r):
            out[i, j] = phi(basis, j, r)
    return out


def slopes_matrix(basis: HatBasis, points: Sequence[float]) -> np.ndarray:
    """Matrix with entries phi'_j(r_i), one row per point (right-derivatives)."""
    points = np.asarray(points, dtype=float)
    out = np.zeros((points.size, basis.size))
    for i, r in enumerate(points):
        for j in _active(basis, r):
            out[i, j] = phi_prime(basis, j, r)
    return out


def is_feasible(z: Sequence[float]) -> bool:
    """Exact membership in Z = {0 < z_1 <= z_2 <= ... <= z_N <= 1}."""
    z = np.asarray(z, dtype=float)
    if z.size == 0 or not z[0] > 0.0 or not z[-1] <= 1.0:
        return False
    return bool(np.all(np.diff(z) >= 0.0))


def feasible_within(z: Sequence[float], tol: float = 1e-9) -> bool:
    """Membership in the closure of Z up to ``tol``.

    Conditioning on the anchor pins z_1 to exactly zero, so posterior
    samples live on the boundary of Z; the closed check is the one that
    applies to them.
    """
    z = np.asarray(z, dtype=float)
    if z.size == 0 or z[0] < -tol or z[-1] > 1.0 + tol:
        return False
    return bool(np.all(np.diff(z) >= -tol))


def s_from_zeta(family, basis: HatBasis, z: Sequence[float]) -> Callable[[float], float]:
    """Transformed-solution curve s(r) for the coefficients z.

    For coefficients in the (closed) cone the curve lies between the family
    envelope bounds, reaching them at zeta = 0 and zeta = 1.
    """
    z = _check_coeffs(basis, z)
    if not feasible_within(z):
        raise InfeasibleCoefficientsError(
            "coefficients violate 0 <= z_1 <= ... <= z_N <= 1 beyond tolerance"
        )

    def s(r: float) -> float:
        return family.s_of(r, zeta(basis, z, r))

    return s
