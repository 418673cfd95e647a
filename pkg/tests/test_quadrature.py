import math

import numpy as np
import pytest

from bswell.errors import QuadratureError
from bswell.geometry import WellGeometry
from bswell.quadrature import (QuadRule, integrate, integrate_open,
                               quad_inverse_sqrt_weight, quad_well)

# independent high-precision values (mpmath, 40 digits, tanh-sinh rule)
LEMNISCATE = 2.6220575542921198  # int_{-1}^{1} dx / sqrt(1 - x^4)


def _well(a: float, b: float) -> WellGeometry:
    return WellGeometry(0.0, a, b, (a, b), 0.0, 0.0)


def test_arcsine_integral():
    value, err = quad_well(lambda x: 1.0 / np.sqrt(1.0 - x * x),
                           _well(-1, 1), singular=True)
    assert value == pytest.approx(np.pi, rel=1e-12)
    assert err <= 1e-10 * abs(value)


def test_half_disk():
    value, _ = quad_well(lambda x: np.sqrt(1.0 - x * x), _well(-1, 1))
    assert value == pytest.approx(np.pi / 2, rel=1e-12)


def test_lemniscatic_value():
    value, _ = quad_well(lambda x: 1.0 / np.sqrt(1.0 - x**4),
                         _well(-1, 1), singular=True)
    assert value == pytest.approx(LEMNISCATE, rel=1e-10)


def test_plain_integrate():
    value, _ = integrate(np.cos, 0.0, 1.0)
    assert value == pytest.approx(math.sin(1.0), rel=1e-13)
    value, _ = integrate_open(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0)
    assert value == pytest.approx(2.0, rel=1e-11)


def test_non_finite_integrand_raises():
    def bad(x):
        return np.where(np.abs(x) < 0.2, np.nan, 1.0)

    with pytest.raises(QuadratureError):
        quad_well(bad, _well(-1, 1))


def test_refinement_limit_raises():
    rule = QuadRule(rel_tol=1e-14, max_depth=2)

    def nasty(x):
        return np.abs(np.sin(40.0 / (np.abs(x) + 1e-3)))

    with pytest.raises(QuadratureError):
        integrate(nasty, -1.0, 1.0, rule)


def test_rule_invariants():
    rule = QuadRule()
    assert np.all(rule.weights > 0)
    assert np.all(rule.nodes > -1.0) and np.all(rule.nodes < 1.0)


def _chebyshev_moment(j: int) -> float:
    # int_{-1}^{1} u^j / sqrt(1 - u^2) du
    if j % 2:
        return 0.0
    k = j // 2
    return math.pi * math.comb(2 * k, k) / 4.0**k


def test_beta_exactness_property():
    """Polynomials (deg <= 9) against 1/sqrt((x-a)(b-x)): analytic moments."""
    rng = np.random.default_rng(2024)
    for _ in range(120):
        a = float(rng.uniform(-3, 0))
        b = a + float(rng.uniform(0.5, 4.0))
        m, w = 0.5 * (a + b), 0.5 * (b - a)
        coefs = rng.uniform(-2, 2, size=10)
        exact = sum(c * _chebyshev_moment(j) for j, c in enumerate(coefs))

        def s(x):
            u = (x - m) / w
            poly = np.zeros_like(u)
            for c in coefs[::-1]:
                poly = poly * u + c
            return poly

        value, _ = quad_inverse_sqrt_weight(s, _well(a, b))
        scale = max(1.0, float(np.sum(np.abs(coefs))))
        assert abs(value - exact) <= 1e-12 * scale


def test_generic_singular_integrand_accuracy():
    # the same weighted integrands through the generic interface keep
    # ten-digit accuracy despite endpoint cancellation in x-space
    value, err = quad_well(lambda x: (2.0 + x) / np.sqrt((x + 1) * (3 - x)),
                           _well(-1, 3), singular=True)
    assert value == pytest.approx(3.0 * math.pi, rel=1e-10)
    assert err <= 1e-9 * abs(value)
