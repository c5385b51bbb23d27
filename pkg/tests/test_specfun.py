"""Hermite/Laguerre evaluation against closed forms and recurrences."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatext.specfun import (hermite_1d, hermite_1d_prime, hermite_nd,
                             laguerre, laguerre_prime, log_gamma, pochhammer)

# H_n for the variance-2 Gaussian: H_0=1, H_1=x, H_2=x^2-2, H_3=x^3-6x,
# H_4=x^4-12x^2+12
X_SAMPLES = np.array([-2.0, -0.7, 0.0, 0.4, 1.3, 3.1])


def test_hermite_low_degrees_closed_form():
    x = X_SAMPLES
    np.testing.assert_allclose(hermite_1d(0, x), np.ones_like(x))
    np.testing.assert_allclose(hermite_1d(1, x), x)
    np.testing.assert_allclose(hermite_1d(2, x), x**2 - 2.0)
    np.testing.assert_allclose(hermite_1d(3, x), x**3 - 6.0 * x)
    np.testing.assert_allclose(hermite_1d(4, x), x**4 - 12.0 * x**2 + 12.0)


def test_hermite_three_term_recurrence():
    # H_{n+1} = x H_n - 2 n H_{n-1}
    x = X_SAMPLES
    for n in range(1, 12):
        lhs = hermite_1d(n + 1, x)
        rhs = x * hermite_1d(n, x) - 2.0 * n * hermite_1d(n - 1, x)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-12)


def test_hermite_derivative_identity():
    # H_n' = n H_{n-1}
    x = X_SAMPLES
    for n in range(1, 10):
        np.testing.assert_allclose(hermite_1d_prime(n, x),
                                   n * hermite_1d(n - 1, x),
                                   rtol=1e-13, atol=1e-12)


def test_hermite_nd_factorizes():
    pts = np.array([[0.3, -1.1], [1.0, 2.0], [-0.5, 0.0]])
    vals = hermite_nd((2, 3), pts)
    expect = hermite_1d(2, pts[:, 0]) * hermite_1d(3, pts[:, 1])
    np.testing.assert_allclose(vals, expect, rtol=1e-14)


def test_laguerre_low_orders_closed_form():
    # Kummer normalization M(-m, beta+1, r), equal to 1 at r = 0
    r = np.array([0.0, 0.3, 1.0, 2.5])
    for beta in (-0.5, 0.0, 0.7):
        np.testing.assert_allclose(laguerre(beta, 0, r), np.ones_like(r))
        np.testing.assert_allclose(laguerre(beta, 1, r),
                                   1.0 - r / (beta + 1.0), rtol=1e-14)
        l2 = (1.0 - 2.0 * r / (beta + 1.0)
              + r**2 / ((beta + 1.0) * (beta + 2.0)))
        np.testing.assert_allclose(laguerre(beta, 2, r), l2, rtol=1e-13,
                                   atol=1e-15)


def test_laguerre_derivative_identity():
    # d/dr M(-m, beta+1, r) = (-m/(beta+1)) M(-(m-1), beta+2, r)
    r = np.array([0.1, 0.7, 1.9, 4.2])
    for beta in (-0.4, 0.0, 1.2):
        for m in range(1, 7):
            np.testing.assert_allclose(
                laguerre_prime(beta, m, r),
                (-m / (beta + 1.0)) * laguerre(beta + 1.0, m - 1, r),
                rtol=1e-12, atol=1e-12)


def test_laguerre_derivative_matches_finite_difference():
    h = 1e-6
    for beta in (-0.5, 0.8):
        for m in (1, 3, 5):
            for r in (0.4, 2.1):
                fd = (laguerre(beta, m, r + h)
                      - laguerre(beta, m, r - h)) / (2.0 * h)
                assert laguerre_prime(beta, m, r) == pytest.approx(
                    fd, rel=1e-7, abs=1e-9)


def test_laguerre_value_at_zero():
    # the Kummer normalization pins every member to 1 at the origin
    for beta in (-0.5, 0.0, 0.8):
        for m in range(6):
            assert laguerre(beta, m, 0.0) == 1.0


def test_laguerre_kummer_equation():
    # r u'' + (beta + 1 - r) u' + m u = 0, with u'' from the derivative chain
    r = np.array([0.2, 1.1, 3.4])
    for beta in (-0.3, 0.6):
        for m in (1, 2, 4):
            u = laguerre(beta, m, r)
            up = laguerre_prime(beta, m, r)
            upp = ((-m / (beta + 1.0)) * (-(m - 1) / (beta + 2.0))
                   * laguerre(beta + 2.0, m - 2, r)) if m >= 2 else 0.0
            resid = r * upp + (beta + 1.0 - r) * up + m * u
            np.testing.assert_allclose(resid, np.zeros_like(r), atol=1e-12)


def test_log_gamma_matches_math_lgamma():
    for z in (0.25, 0.5, 1.0, 1.5, 3.7, 12.0):
        assert log_gamma(z) == pytest.approx(math.lgamma(z), rel=1e-15)


def test_pochhammer_values():
    assert pochhammer(3.0, 0) == 1.0
    assert pochhammer(3.0, 2) == 12.0
    assert pochhammer(0.5, 3) == pytest.approx(0.5 * 1.5 * 2.5)
    assert pochhammer(-2.0, 3) == 0.0  # hits zero factor


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=15),
       st.floats(min_value=-4.0, max_value=4.0,
                 allow_nan=False, allow_infinity=False))
def test_hermite_parity_property(n, x):
    # H_n(-x) = (-1)^n H_n(x)
    lhs = float(hermite_1d(n, -x))
    rhs = (-1.0) ** n * float(hermite_1d(n, x))
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=10),
       st.floats(min_value=-0.9, max_value=2.0,
                 allow_nan=False, allow_infinity=False),
       st.floats(min_value=0.0, max_value=6.0,
                 allow_nan=False, allow_infinity=False))
def test_laguerre_recurrence_property(m, beta, r):
    # contiguous relation in Kummer form:
    # (beta + m + 1) M_{m+1} = (2m + beta + 1 - r) M_m - m M_{m-1}
    lhs = (beta + m + 1.0) * float(laguerre(beta, m + 1, r))
    rhs = ((2.0 * m + beta + 1.0 - r) * float(laguerre(beta, m, r))
           - m * float(laguerre(beta, m - 1, r)))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-9)
