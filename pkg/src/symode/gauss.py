"""Exact Gaussian conditioning on linear data and whitening of the cone.

The prior N(0, I) on the hat coefficients is conditioned on the exact
linear data Phi z = b (one anchor row, one derivative row per design
point).  The conditioned covariance is a singular projector; its low-rank
factorisation z = mu + U Lambda z_tilde recasts the monotone-bounded cone
as a polytope F z_tilde + g >= 0 in the whitened coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .prior import HatBasis, slopes_matrix, values_matrix

__all__ = [
    "LinearData",
    "WhitenedPolytope",
    "DesignPointError",
    "RankDeficiencyError",
    "IllConditionedError",
    "RankMismatchError",
    "assemble",
    "condition",
    "reduce",
    "whiten",
]

KNOT_TOL = 1e-9
CONDITION_LIMIT = 1e12
EIGENVALUE_DROP = 1e-10


class DesignPointError(ValueError):
    """A design point coincides with a knot or leaves the knot span."""


class RankDeficiencyError(ValueError):
    """The data matrix does not have full row rank."""


class IllConditionedError(ArithmeticError):
    """The Gram matrix of the data rows is numerically singular."""


class RankMismatchError(ArithmeticError):
    """The factorisation rank disagrees with the rank law rho = N - n - 1."""


@dataclass(frozen=True)
class LinearData:
    """Exact linear observations Phi z = b; the first row is the anchor."""

    phi: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class WhitenedPolytope:
    """Conditioned mean, low-rank factor M = U Lambda, and the cone rewritten
    as F z_tilde + g >= 0 in the whitened coordinates."""

    mu: np.ndarray
    factor: np.ndarray
    f_matrix: np.ndarray
    g_vector: np.ndarray
    rho: int


def assemble(
    basis: HatBasis,
    r0: float,
    b0: float,
    design: Sequence[float],
    data: Sequence[float],
) -> LinearData:
    """Build Phi and b from the anchor (r0, b0) and slope data at the design.

    Design points must lie strictly inside the knot span and strictly
    between knots (hat derivatives are ambiguous at knots).  Duplicate
    points produce identical rows and are rejected by the rank check.
    """
    design = np.asarray(design, dtype=float)
    data = np.asarray(data, dtype=float)
    if design.shape != data.shape:
        raise ValueError(f"{design.size} design points but {data.size} data values")
    knots = basis.knots
    lo, hi = knots[0], knots[-1]
    if not (lo - KNOT_TOL <= r0 <= hi + KNOT_TOL):
        raise DesignPointError(f"anchor r0 = {r0!r} outside the knot span [{lo!r}, {hi!r}]")
    for index, r in enumerate(design):
        if not (lo < r < hi):
            raise DesignPointError(
                f"design point {index} (r = {r!r}) outside the open knot span ({lo!r}, {hi!r})"
            )
        if np.abs(knots - r).min() < KNOT_TOL:
            raise DesignPointError(
                f"design point {index} (r = {r!r}) collides with a knot (within {KNOT_TOL})"
            )
    phi = np.vstack([values_matrix(basis, [r0]), slopes_matrix(basis, design)])
    b = np.concatenate([[float(b0)], data])
    if np.linalg.matrix_rank(phi) < phi.shape[0]:
        raise RankDeficiencyError(
            "data rows are linearly dependent (duplicate design points in one knot cell?)"
        )
    return LinearData(phi, b)


def condition(data: LinearData):
    """Condition N(0, I) on Phi z = b.

    Returns (mu, Sigma) with mu = Phi^T (Phi Phi^T)^-1 b and
    Sigma = I - Phi^T (Phi Phi^T)^-1 Phi, the standard conditional of an
    isotropic Gaussian on an exact linear observation.  Sigma is the
    orthogonal projector onto the null space of Phi.
    """
    phi, b = data.phi, data.b
    gram = phi @ phi.T
    if np.linalg.cond(gram) > CONDITION_LIMIT:
        raise IllConditionedError("Phi Phi^T condition number exceeds 1e12")
    pulled = np.linalg.solve(gram, np.column_stack([b, phi]))
    mu = phi.T @ pulled[:, 0]
    sigma = np.eye(phi.shape[1]) - phi.T @ pulled[:, 1:]
    sigma = 0.5 * (sigma + sigma.T)
    return mu, sigma


def reduce(sigma: np.ndarray, expected_rank: Optional[int] = None):
    """Factor Sigma = U Lambda^2 U^T, dropping the numerically zero spectrum.

    Eigenvalues below EIGENVALUE_DROP relative to the largest (with a tiny
    absolute floor) are discarded.  When ``expected_rank`` is given, a
    mismatch raises RankMismatchError rather than silently repairing: the
    rank is dictated by the rank law and a violation means bad design data.
    """
    sigma = np.asarray(sigma, dtype=float)
    w, v = np.linalg.eigh(0.5 * (sigma + sigma.T))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    wmax = float(w[0]) if w.size else 0.0
    cut = max(EIGENVALUE_DROP * max(wmax, 0.0), 1e-13)
    keep = w > cut
    rho = int(keep.sum())
    if expected_rank is not None and rho != expected_rank:
        raise RankMismatchError(f"factorisation rank {rho} != expected N - n - 1 = {expected_rank}")
    u = v[:, keep]
    # Deterministic sign convention: largest-magnitude entry of each column positive.
    for col in range(u.shape[1]):
        pivot = np.argmax(np.abs(u[:, col]))
        if u[pivot, col] < 0.0:
            u[:, col] = -u[:, col]
    lam = np.sqrt(w[keep])
    return u, lam, rho


def whiten(mu: np.ndarray, u: np.ndarray, lam: np.ndarray) -> WhitenedPolytope:
    """Rewrite the cone 0 <= z_1 <= ... <= z_N <= 1 for z = mu + U Lambda z_tilde.

    Rows follow the block pattern (m_1; m_{i+1} - m_i; -m_N) and
    (mu_1; mu_{i+1} - mu_i; 1 - mu_N).  The strict bound 0 < z_1 is relaxed
    to closed; the sampler starts from an interior point.
    """
    mu = np.asarray(mu, dtype=float)
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if u.shape[0] != mu.size or u.shape[1] != lam.size:
        raise ValueError(f"inconsistent shapes: mu {mu.shape}, U {u.shape}, Lambda {lam.shape}")
    factor = u * lam[np.newaxis, :]
    f_matrix = np.vstack([factor[:1], np.diff(factor, axis=0), -factor[-1:]])
    g_vector = np.concatenate([mu[:1], np.diff(mu), [1.0 - mu[-1]]])
    return WhitenedPolytope(mu, factor, f_matrix, g_vector, factor.shape[1])
