"""Tests for the canonical charts, reduced right-hand sides, and families."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from symode import parse
from symode.charts import (
    BlowUpError,
    ChartDomainError,
    FirstOrderFamily,
    InformationError,
    NoRealSolutionError,
    SecondOrderFamily,
    SingularReductionError,
    chart_first_order,
    chart_second_order,
    information_first_order,
    information_second_order,
    integration_constant_second_order,
    reduced_rhs_first_order,
    reduced_rhs_second_order,
)

FIRST = chart_first_order(5.0)
SECOND = chart_second_order(5.0, 10.0)


def _fd_partial(fn, h):
    """Fourth-order central difference, Richardson-extrapolated once."""

    def stencil(step):
        return (-fn(2 * step) + 8 * fn(step) - 8 * fn(-step) + fn(-2 * step)) / (12 * step)

    return (16.0 * stencil(h / 2) - stencil(h)) / 15.0


def _fd_gradient(fn, x, y, h=1e-2):
    """High-order finite-difference gradient of a scalar map of (x, y)."""
    hx = h * max(1.0, abs(x))
    hy = h * max(1.0, abs(y))
    gx = _fd_partial(lambda d: fn(x + d, y), hx)
    gy = _fd_partial(lambda d: fn(x, y + d), hy)
    return gx, gy


# ---------------------------------------------------------------- first-order chart


def test_first_order_forward_and_roundtrip():
    r, s = FIRST.forward(2.0, 3.0)
    assert (r, s) == (1.5, math.log(3.0))
    x, y = FIRST.inverse(r, s)
    assert x == pytest.approx(2.0, rel=1e-12)
    assert y == pytest.approx(3.0, rel=1e-12)


def test_first_order_canonical_pdes():
    """X r = 0 and X s = 1 for the scaling generator, via finite differences."""
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.uniform(0.5, 4.0)
        y = rng.uniform(0.5, 4.0)
        rx, ry = _fd_gradient(lambda a, b: FIRST.forward(a, b)[0], x, y)
        sx, sy = _fd_gradient(lambda a, b: FIRST.forward(a, b)[1], x, y)
        assert abs(x * rx + y * ry) < 1e-10
        assert abs(x * sx + y * sy - 1.0) < 1e-10


def test_first_order_envelope():
    assert FIRST.s_lower(1.0) == pytest.approx(0.0)
    assert FIRST.s_upper(1.0) == pytest.approx(math.log(5.0))
    rng = np.random.default_rng(2)
    for r in rng.uniform(0.2, 3.0, size=50):
        x_lo, _ = FIRST.inverse(r, FIRST.s_lower(r))
        x_hi, _ = FIRST.inverse(r, FIRST.s_upper(r))
        assert x_lo == pytest.approx(1.0, abs=1e-10)
        assert x_hi == pytest.approx(5.0, abs=1e-10)


def test_first_order_roundtrip_random():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        x = rng.uniform(0.1, 10.0)
        y = rng.uniform(0.1, 10.0)
        r, s = FIRST.forward(x, y)
        x2, y2 = FIRST.inverse(r, s)
        assert x2 == pytest.approx(x, rel=1e-12)
        assert y2 == pytest.approx(y, rel=1e-12)


def test_first_order_domain_errors():
    with pytest.raises(ChartDomainError):
        FIRST.forward(2.0, -1.0)
    with pytest.raises(ChartDomainError):
        FIRST.forward(-2.0, 1.0)
    with pytest.raises(ChartDomainError):
        FIRST.inverse(-0.5, 0.0)


def test_first_order_general_x0_envelope():
    chart = chart_first_order(5.0, x0=2.0)
    for r in (0.5, 1.0, 2.0):
        assert chart.inverse(r, chart.s_lower(r))[0] == pytest.approx(2.0, abs=1e-10)
        assert chart.inverse(r, chart.s_upper(r))[0] == pytest.approx(5.0, abs=1e-10)


# ---------------------------------------------------------------- second-order chart


def test_second_order_forward_and_roundtrip():
    r, s = SECOND.forward(5.0, -10.0)
    assert r == pytest.approx(-0.3)
    assert s == pytest.approx(0.1)
    x, y = SECOND.inverse(r, s)
    assert x == pytest.approx(5.0, rel=1e-12)
    assert y == pytest.approx(-10.0, rel=1e-12)


def test_second_order_envelope_at_initial_point():
    assert SECOND.s_lower(-0.3) == pytest.approx(0.1)
    assert SECOND.s_upper(-0.3) == pytest.approx(0.2)
    rng = np.random.default_rng(4)
    for r in rng.uniform(-0.5, -0.15, size=50):
        assert SECOND.inverse(r, SECOND.s_lower(r))[0] == pytest.approx(5.0, abs=1e-10)
        assert SECOND.inverse(r, SECOND.s_upper(r))[0] == pytest.approx(10.0, abs=1e-10)


def test_second_order_canonical_pdes():
    """X1 r = 0 and X1 s = 1 for X1 = x^2 d/dx + y^2 d/dy."""
    rng = np.random.default_rng(5)
    for _ in range(100):
        x = rng.uniform(2.0, 8.0)
        y = rng.uniform(-9.0, -2.0)
        rx, ry = _fd_gradient(lambda a, b: SECOND.forward(a, b)[0], x, y)
        sx, sy = _fd_gradient(lambda a, b: SECOND.forward(a, b)[1], x, y)
        assert abs(x * x * rx + y * y * ry) < 1e-10
        assert abs(x * x * sx + y * y * sy - 1.0) < 1e-10


def test_second_order_roundtrip_random():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        x = rng.uniform(1.0, 12.0)
        y = rng.uniform(-12.0, -1.0)
        r, s = SECOND.forward(x, y)
        x2, y2 = SECOND.inverse(r, s)
        assert x2 == pytest.approx(x, rel=1e-12)
        assert y2 == pytest.approx(y, rel=1e-12)


def test_second_order_domain_errors():
    with pytest.raises(ChartDomainError):
        SECOND.forward(0.0, 1.0)
    with pytest.raises(ChartDomainError):
        SECOND.inverse(-0.3, 0.0)
    with pytest.raises(ChartDomainError):
        SECOND.inverse(-0.3, 0.3)


# ---------------------------------------------------------------- first-order reduction


def test_reduced_rhs_simplifies_for_paper_gradient():
    g = reduced_rhs_first_order(parse("1/r + r"))
    assert g(1.0) == pytest.approx(2.0)
    assert g(2.0) == pytest.approx(2.5)


def test_reduced_rhs_invariant_solution_is_singular():
    g = reduced_rhs_first_order(parse("r"))
    for r in (0.3, 0.7, 1.9):
        with pytest.raises(SingularReductionError):
            g(r)


def test_reduced_rhs_constant_gradient():
    g = reduced_rhs_first_order(lambda r: 2.0)
    assert g(1.0) == pytest.approx(2.0)  # 2 / (-1 + 2)


# ---------------------------------------------------------------- second-order reduction


def test_integration_constant_paper_data():
    c, branch = integration_constant_second_order(5.0, -10.0, 1.0)
    assert branch == -1  # x0 / y0 = -0.5 < 0
    assert c == pytest.approx(math.log(40.0 / 3.0), rel=1e-14)
    # residual of the integrated relation at the initial data
    w0, v0 = 0.25, -0.3
    lhs = math.log(abs(v0))
    rhs = math.log(2.0 * math.sqrt(w0) - 1.0 + 2.0 / math.sqrt(w0)) - c
    assert abs(lhs - rhs) < 1e-10


def test_integration_constant_requires_positive_w0():
    with pytest.raises(ChartDomainError):
        integration_constant_second_order(5.0, -10.0, 0.0)
    with pytest.raises(ChartDomainError):
        integration_constant_second_order(5.0, -10.0, -1.0)


def test_initial_invariants_match_chart_derivative_transform():
    """v0, w0 from their definitions agree with the chart composed with the
    slope transform: w = u / (1 + u) where u = ds/dr along the solution."""
    x0, y0, y0p = 5.0, -10.0, 1.0
    v0 = 1.0 / y0 - 1.0 / x0
    w0 = y0p * (x0 / y0) ** 2
    r0, _ = SECOND.forward(x0, y0)
    assert r0 == pytest.approx(v0, abs=1e-12)
    # ds/dr = (s_x + s_y y') / (r_x + r_y y') via finite differences
    rx, ry = _fd_gradient(lambda a, b: SECOND.forward(a, b)[0], x0, y0)
    sx, sy = _fd_gradient(lambda a, b: SECOND.forward(a, b)[1], x0, y0)
    u = (sx + sy * y0p) / (rx + ry * y0p)
    assert w0 == pytest.approx(u / (1.0 + u), abs=1e-12)


def test_reduced_rhs_second_order_algebraic_roundtrip():
    u_target = 0.25
    k = math.sqrt(u_target / (1 + u_target)) + math.sqrt((1 + u_target) / u_target)
    assert k == pytest.approx(2.6833, abs=1e-4)
    for c, branch in ((0.3, 1), (1.1, -1)):
        em = math.exp(-c)
        r = 2.0 * em * k + branch * em  # inverts K(r) = (|r| - branch e^-C)/(2 e^-C)
        g = reduced_rhs_second_order(c, branch)
        assert g(r) == pytest.approx(u_target, abs=1e-12)


def test_reduced_rhs_second_order_blowup_and_no_solution():
    c, branch = 0.4, 1
    em = math.exp(-c)
    with pytest.raises(BlowUpError):
        reduced_rhs_second_order(c, branch)(5.0 * em)  # K = 2 exactly
    with pytest.raises(NoRealSolutionError):
        reduced_rhs_second_order(c, branch)(em)  # K = 0


def test_inner_reduction_consistent_with_quadrature():
    """Integrating H(w) = (1 - w) / (+-w^1.5 + 2 w (w + 1)) reproduces the
    closed form -log(2w +- sqrt(w) + 2) + log(w)/2 + C."""
    for sign in (1.0, -1.0):

        def h(w):
            return (1.0 - w) / (sign * w**1.5 + 2.0 * w * (w + 1.0))

        def closed(w):
            return -math.log(2.0 * w + sign * math.sqrt(w) + 2.0) + 0.5 * math.log(w)

        for upper in (0.3, 0.6, 1.0):
            integral, err = quad(h, 0.1, upper, epsabs=1e-12, epsrel=1e-12)
            assert integral == pytest.approx(closed(upper) - closed(0.1), abs=1e-8)


# ---------------------------------------------------------------- information operators


def test_information_first_order_values():
    values = information_first_order(parse("1/r + r"), [1.0, 2.0])
    assert [r for r, _ in values] == [1.0, 2.0]
    assert [g for _, g in values] == pytest.approx([2.0, 2.5])


def test_information_empty_design():
    assert information_first_order(parse("1/r + r"), []) == []
    c, branch = integration_constant_second_order(5.0, -10.0, 1.0)
    assert information_second_order(c, branch, []) == []


def test_information_reports_offending_index():
    with pytest.raises(InformationError) as info:
        information_first_order(parse("r"), [0.5, 0.8])
    assert info.value.index == 0
    c, branch = integration_constant_second_order(5.0, -10.0, 1.0)
    with pytest.raises(InformationError) as info:
        information_second_order(c, branch, [-0.3, -0.01])  # second point has K < 2
    assert info.value.index == 1


def test_information_second_order_single_point():
    c, branch = integration_constant_second_order(5.0, -10.0, 1.0)
    values = information_second_order(c, branch, [-0.3])
    assert len(values) == 1
    assert values[0][1] == pytest.approx(1.0 / 3.0, rel=1e-12)


# ---------------------------------------------------------------- families


def test_family_slope_targets_invert_s_parametrisation():
    family = FirstOrderFamily(parse("1/r + r"), x_t=5.0, y0=1.0)
    r, g = 1.5, 2.3
    b = family.slope_target(r, g)
    assert 1.0 / r + family.zeta_scale * b == pytest.approx(g, rel=1e-14)

    family2 = SecondOrderFamily(5.0, 10.0, -10.0, 1.0)
    b2 = family2.slope_target(-0.28, 0.9)
    assert -1.0 + family2.zeta_scale * b2 == pytest.approx(0.9, rel=1e-14)


def test_family_initial_coordinates_anchor_the_envelope():
    family = FirstOrderFamily(parse("1/r + r"), x_t=5.0, y0=1.0)
    chart = family.chart()
    assert family.s_of(family.initial_r, 0.0) == pytest.approx(chart.s_lower(family.initial_r))
    family2 = SecondOrderFamily(5.0, 10.0, -10.0, 1.0)
    chart2 = family2.chart()
    assert family2.s_of(family2.initial_r, 0.0) == pytest.approx(chart2.s_lower(family2.initial_r))
    assert family2.s_of(family2.initial_r, 1.0) == pytest.approx(chart2.s_upper(family2.initial_r))
