"""Tests for the polynomial vector-field algebra and symmetry checks."""

import math

import numpy as np
import pytest

from symode.lie import (
    BivariatePoly,
    DependentGeneratorsError,
    Jet,
    NotSolvableError,
    OffSurfaceError,
    apply,
    commutator,
    expand_in_basis,
    extended_infinitesimal,
    field,
    first_order_homogeneous_surface,
    second_order_example_surface,
    solvable_2d_order,
    span_coefficients,
    symmetry_residual,
)

# The three generators admitted by the built-in second-order equation.
X1 = field({(2, 0): 1}, {(0, 2): 1})  # x^2 d/dx + y^2 d/dy
X2 = field({(1, 0): 1}, {(0, 1): 1})  # x d/dx + y d/dy
X3 = field({(0, 0): 1}, {(0, 0): 1})  # d/dx + d/dy


def _random_field(rng, degree=2, span=3):
    xi = {(i, j): float(rng.integers(-span, span + 1)) for i in range(degree + 1) for j in range(degree + 1 - i)}
    eta = {(i, j): float(rng.integers(-span, span + 1)) for i in range(degree + 1) for j in range(degree + 1 - i)}
    return field(xi, eta)


# ---------------------------------------------------------------- apply


def test_apply_scaling_on_xy():
    p = BivariatePoly.monomial(1, 1)  # xy
    assert apply(X2, p) == BivariatePoly.from_terms({(1, 1): 2.0})


def test_apply_constant_gives_zero():
    p = BivariatePoly.constant(7.0)
    assert apply(X1, p).is_zero


def test_apply_picks_xi_coefficient():
    p = BivariatePoly.monomial(1, 0)  # x
    assert apply(X1, p) == BivariatePoly.monomial(2, 0)


# ---------------------------------------------------------------- commutator


def test_commutator_paper_pair_exact():
    assert commutator(X1, X2) == -X1


def test_commutator_alternativity_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        v = _random_field(rng)
        assert commutator(v, v).is_zero


def test_commutator_translation_and_scaling():
    d_dx = field({(0, 0): 1}, {})
    x_dx = field({(1, 0): 1}, {})
    assert commutator(d_dx, x_dx) == d_dx


def test_jacobi_identity_exact_random_triples():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x, y, z = (_random_field(rng) for _ in range(3))
        total = (
            commutator(x, commutator(y, z))
            + commutator(y, commutator(z, x))
            + commutator(z, commutator(x, y))
        )
        assert total.is_zero  # exact cancellation with integer coefficients


def test_bracket_bilinearity_exact():
    rng = np.random.default_rng(9)
    for _ in range(20):
        x, y, z = (_random_field(rng, degree=1) for _ in range(3))
        a, b = float(rng.integers(-4, 5)), float(rng.integers(-4, 5))
        left = commutator(a * x + b * y, z)
        right = a * commutator(x, z) + b * commutator(y, z)
        assert left == right


# ---------------------------------------------------------------- span


def test_span_paper_bracket():
    assert span_coefficients(-X1, X1, X2) == (-1.0, 0.0)


def test_span_trivial():
    assert span_coefficients(X1, X1, X2) == (1.0, 0.0)


def test_span_outside():
    w = field({(3, 0): 1}, {})
    v1 = field({(1, 0): 1}, {})
    v2 = field({}, {(0, 1): 1})
    assert span_coefficients(w, v1, v2) is None


def test_span_dependent_generators_rejected():
    with pytest.raises(DependentGeneratorsError):
        span_coefficients(X1, X2, 2.0 * X2)


def test_expand_in_basis_three_generators():
    assert expand_in_basis(commutator(X2, X3), [X1, X2, X3]) == pytest.approx([0.0, 0.0, -1.0])


# ---------------------------------------------------------------- solvable ordering


def test_solvable_order_paper_pair():
    first, second, lam = solvable_2d_order(X1, X2)
    assert first == X1 and second == X2 and lam == -1.0


def test_solvable_order_abelian():
    d_dx = field({(0, 0): 1}, {})
    d_dy = field({}, {(0, 0): 1})
    first, second, lam = solvable_2d_order(d_dx, d_dy)
    assert lam == 0.0
    assert (first, second) in [(d_dx, d_dy), (d_dy, d_dx)]


def test_solvable_order_swaps_to_normal_subalgebra():
    # [X2, X3] = -X3, so the translation generator must come first.
    first, second, lam = solvable_2d_order(X2, X3)
    assert first == X3
    assert commutator(first, second) == lam * first


def test_solvable_order_rejects_non_algebra():
    d_dy = field({}, {(0, 0): 1})
    y_dx = field({(0, 1): 1}, {})
    # [d/dy, y d/dx] = d/dx, outside span{d/dy, y d/dx}.
    with pytest.raises(NotSolvableError):
        solvable_2d_order(d_dy, y_dx)


# ---------------------------------------------------------------- extended infinitesimals


def _eta1_closed_form(v, jet):
    """Hand-derived eta^(1) = eta_x + (eta_y - xi_x) y1 - xi_y y1^2."""
    x, y = jet.x, jet.y
    y1 = jet.derivs[0]
    xi, eta = v.xi, v.eta
    return (
        eta.partial_x()(x, y)
        + (eta.partial_y()(x, y) - xi.partial_x()(x, y)) * y1
        - xi.partial_y()(x, y) * y1**2
    )


def _eta2_closed_form(v, jet):
    """Hand-derived eta^(2); note the -3 xi_y y1 y2 cross term."""
    x, y = jet.x, jet.y
    y1, y2 = jet.derivs[:2]
    xi, eta = v.xi, v.eta
    xi_x, xi_y = xi.partial_x(), xi.partial_y()
    eta_x, eta_y = eta.partial_x(), eta.partial_y()
    return (
        eta_x.partial_x()(x, y)
        + (2.0 * eta_x.partial_y()(x, y) - xi_x.partial_x()(x, y)) * y1
        + (eta_y.partial_y()(x, y) - 2.0 * xi_x.partial_y()(x, y)) * y1**2
        - xi_y.partial_y()(x, y) * y1**3
        + (eta.partial_y()(x, y) - 2.0 * xi.partial_x()(x, y)) * y2
        - 3.0 * xi_y(x, y) * y1 * y2
    )


def test_extended_scaling_field_vanishes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        jet = Jet(rng.uniform(-2, 2), rng.uniform(-2, 2), (rng.uniform(-2, 2),))
        assert extended_infinitesimal(X2, 1, jet) == 0.0


def test_extended_first_order_quadratic_field():
    # xi = x^2, eta = y^2 gives eta^(1) = 2 (y - x) y1.
    rng = np.random.default_rng(4)
    for _ in range(20):
        x, y, y1 = rng.uniform(-2, 2, size=3)
        jet = Jet(x, y, (y1,))
        assert extended_infinitesimal(X1, 1, jet) == pytest.approx(2.0 * (y - x) * y1, rel=1e-14)


def test_extended_zero_field():
    zero = field({}, {})
    jet = Jet(0.3, -1.2, (0.5, 0.25, -0.125))
    for k in (1, 2, 3):
        assert extended_infinitesimal(zero, k, jet) == 0.0


def test_extended_jet_too_short():
    with pytest.raises(ValueError):
        extended_infinitesimal(X1, 2, Jet(1.0, 1.0, (0.5,)))


def test_recursion_matches_closed_forms_random():
    """Recursion vs the explicit eta^(1), eta^(2) formulas at 100 random jets."""
    rng = np.random.default_rng(12)
    for _ in range(100):
        v = _random_field(rng)
        jet = Jet(*rng.uniform(-2, 2, size=2), tuple(rng.uniform(-2, 2, size=2)))
        e1 = extended_infinitesimal(v, 1, jet)
        e2 = extended_infinitesimal(v, 2, jet)
        c1 = _eta1_closed_form(v, jet)
        c2 = _eta2_closed_form(v, jet)
        assert e1 == pytest.approx(c1, rel=1e-10, abs=1e-12)
        assert e2 == pytest.approx(c2, rel=1e-10, abs=1e-12)


def test_flow_consistency_scaling_family():
    """For the scaling family x* = e^eps x, y* = e^eps y the slope y1 is
    invariant; a finite difference of the transformed slope in eps must
    agree with eta^(1) = 0."""
    x, y, y1 = 1.3, 0.8, 0.6

    def slope_after(eps):
        # Y1 = (Y_x + y1 Y_y) / (X_x + y1 X_y) for X = e^eps x, Y = e^eps y
        return (0.0 + y1 * math.exp(eps)) / (math.exp(eps) + y1 * 0.0)

    eps = 1e-5
    fd = (slope_after(eps) - slope_after(-eps)) / (2 * eps)
    eta1 = extended_infinitesimal(X2, 1, Jet(x, y, (y1,)))
    assert abs(fd - eta1) < 1e-6


# ---------------------------------------------------------------- symmetry residual


def _second_order_jets(count, seed=0):
    surface = second_order_example_surface()
    rng = np.random.default_rng(seed)
    jets = []
    while len(jets) < count:
        x = rng.uniform(1.0, 6.0)
        y = rng.uniform(-8.0, -1.0)
        y1 = rng.uniform(0.05, 3.0)
        jets.append(Jet(x, y, (y1, surface.top_derivative(x, y, (y1,)))))
    return jets


def test_second_order_surface_admits_all_three_generators():
    surface = second_order_example_surface()
    jets = _second_order_jets(100)
    for v in (X1, X2, X3):
        assert symmetry_residual(surface, v, jets) < 1e-6


def test_second_order_surface_rejects_wrong_generator():
    surface = second_order_example_surface()
    jets = _second_order_jets(100)
    wrong = field({(1, 0): 1}, {})  # x d/dx alone is not admitted
    assert symmetry_residual(surface, wrong, jets) > 1e-2


def test_translation_admitted_by_pure_x_gradient():
    # y1 - F(x) = 0 admits d/dy exactly; here F(x) = x^2.
    from symode.lie import OdeSurface

    surface = OdeSurface(
        order=1,
        top_derivative=lambda x, y, lower: x**2,
        gradient=lambda jet: (-2.0 * jet.x, 0.0, 1.0),
    )
    d_dy = field({}, {(0, 0): 1})
    jets = [Jet(x, 0.4 * x, (x**2,)) for x in np.linspace(0.5, 3.0, 20)]
    assert symmetry_residual(surface, d_dy, jets) == 0.0


def test_x_translation_not_admitted_by_homogeneous_equation():
    # y1 = y/x is not invariant under x -> x + eps.
    surface = first_order_homogeneous_surface(lambda r: r, fprime=lambda r: 1.0)
    jets = [Jet(1.0, 2.0, (2.0,))]
    assert symmetry_residual(surface, field({(0, 0): 1}, {}), jets) == pytest.approx(2.0)


def test_first_order_family_admits_scaling_with_numeric_derivative():
    surface = first_order_homogeneous_surface(lambda r: 1.0 / r + r)
    rng = np.random.default_rng(8)
    jets = []
    for _ in range(100):
        x = rng.uniform(1.0, 4.0)
        y = rng.uniform(0.5, 4.0)
        jets.append(Jet(x, y, (surface.top_derivative(x, y, ()),)))
    assert symmetry_residual(surface, X2, jets) < 1e-6


def test_off_surface_jet_rejected():
    surface = second_order_example_surface()
    good = _second_order_jets(1)[0]
    bad = Jet(good.x, good.y, (good.derivs[0], good.derivs[1] + 1.0))
    with pytest.raises(OffSurfaceError):
        symmetry_residual(surface, X2, [bad])
