import math

import numpy as np
import pytest

from bswell.errors import EvalDomainError, ParseError
from bswell.potential import (evaluate, eval_derivs, parse_expression,
                              parse_potential, to_source)


def test_square_basics():
    p = parse_potential("x^2")
    assert p.value(2.0) == 4.0
    assert p.deriv(2, 0.37) == 2.0
    assert p.deriv(2, -5.0) == 2.0


def test_mixed_quartic_first_derivative():
    p = parse_potential("x^2 + 0.25*x^4")
    assert p.deriv(1, 1.0) == pytest.approx(3.0, rel=0, abs=0)


def test_missing_exponent_position():
    with pytest.raises(ParseError) as err:
        parse_potential("x^")
    assert err.value.position == 2
    assert any("exponent" in e for e in err.value.expected)


def test_quartic_derivs():
    p = parse_potential("x^4")
    assert eval_derivs(p, 1.0) == (1.0, 4.0, 12.0, 24.0, 24.0)


def test_square_derivs_at_zero():
    p = parse_potential("x^2")
    assert eval_derivs(p, 0.0) == (0.0, 0.0, 2.0, 0.0, 0.0)


def test_morse_like_value():
    p = parse_potential("exp(-x)*(exp(-x) - 2)")
    assert p.value(0.0) == pytest.approx(-1.0, rel=1e-15)


def test_unknown_identifier():
    with pytest.raises(ParseError):
        parse_potential("x + y")


def test_unsupported_function():
    with pytest.raises(ParseError) as err:
        parse_potential("sinh(x)")
    assert "sinh" in str(err.value)


def test_no_implicit_multiplication():
    with pytest.raises(ParseError):
        parse_potential("2x")


def test_empty_input():
    with pytest.raises(ParseError):
        parse_potential("   ")


def test_unbalanced_paren():
    with pytest.raises(ParseError):
        parse_potential("(x + 1")


def test_log_domain():
    p = parse_potential("log(x)")
    assert p.value(1.0) == 0.0
    with pytest.raises(EvalDomainError):
        p.value(-1.0)


def test_sqrt_domain():
    p = parse_potential("sqrt(x)")
    assert p.value(4.0) == 2.0
    with pytest.raises(EvalDomainError):
        p.value(-4.0)


def test_negative_power_of_zero():
    p = parse_potential("x^(-1)")
    assert p.value(2.0) == 0.5
    with pytest.raises(EvalDomainError):
        p.value(0.0)


def test_general_exponent_rewritten():
    # f^g with non-rational g becomes exp(g*log(f))
    p = parse_potential("2^x")
    assert p.value(3.0) == pytest.approx(8.0, rel=1e-14)
    with pytest.raises(EvalDomainError):
        parse_potential("x^x").value(-1.0)


def test_rational_exponent_forms():
    assert parse_potential("x^(1/2)").value(9.0) == pytest.approx(3.0, rel=1e-15)
    assert parse_potential("x^0.5").value(9.0) == pytest.approx(3.0, rel=1e-15)
    assert parse_potential("x^(-1/2)").value(4.0) == pytest.approx(0.5, rel=1e-15)


def test_division():
    p = parse_potential("x / 4 + 1/2")
    assert p.value(2.0) == 1.0


def test_evaluation_vectorized_matches_scalar():
    p = parse_potential("x^2 + tanh(x) - 0.3*cos(x)")
    xs = np.linspace(-2, 2, 17)
    vec = p.value(xs)
    for xi, vi in zip(xs, vec):
        assert p.value(float(xi)) == vi


def test_evaluation_pure():
    p = parse_potential("exp(-x)*(exp(-x) - 2)")
    a = p.value(0.7)
    b = p.value(0.7)
    assert a == b


# ---------------------------------------------------------------------------
# randomized property suites

def _random_poly(rng) -> str:
    deg = rng.integers(0, 7)
    coefs = [float(c) for c in rng.uniform(-3, 3, size=deg + 1)]
    parts = []
    for k, c in enumerate(coefs):
        parts.append(f"({c!r})*x^{k}" if k else f"({c!r})")
    return " + ".join(parts)


def _random_expr(rng, depth=0) -> str:
    kinds = ["poly", "call", "binary"] if depth < 2 else ["poly"]
    kind = kinds[rng.integers(0, len(kinds))]
    if kind == "poly":
        return _random_poly(rng)
    if kind == "call":
        fn = ("exp", "sin", "cos", "tanh")[rng.integers(0, 4)]
        return f"{fn}(tanh(0.3*({_random_expr(rng, depth + 1)})))"
    a = _random_expr(rng, depth + 1)
    b = _random_expr(rng, depth + 1)
    op = ("+", "-", "*")[rng.integers(0, 3)]
    return f"({a}) {op} ({b})"


def test_roundtrip_property():
    rng = np.random.default_rng(20240811)
    xs = rng.uniform(-2, 2, size=32)
    for _ in range(120):
        a = parse_expression(_random_expr(rng))
        b = parse_expression(to_source(a))
        va, vb = evaluate(a, xs), evaluate(b, xs)
        assert np.allclose(va, vb, rtol=1e-14, atol=1e-14)
        # second round trip is exactly stable
        c = parse_expression(to_source(b))
        assert to_source(c) == to_source(b)


def test_roundtrip_exact_for_polynomials():
    rng = np.random.default_rng(7)
    xs = rng.uniform(-2, 2, size=32)
    for _ in range(100):
        p = parse_potential(_random_poly(rng))
        q = parse_potential(to_source(p.ast))
        assert np.array_equal(p.value(xs), q.value(xs))


def test_derivative_fd_property():
    rng = np.random.default_rng(99)
    for _ in range(120):
        p = parse_potential(_random_poly(rng))
        x = float(rng.uniform(-2, 2))
        for k in range(1, 5):
            s = 1e-5 * max(1.0, abs(x))
            fd = (p.deriv(k - 1, x + s) - p.deriv(k - 1, x - s)) / (2 * s)
            sym = p.deriv(k, x)
            scale = max(abs(sym), abs(fd), 1.0)
            assert abs(sym - fd) <= 1e-6 * scale


def test_derivative_fd_with_calls():
    rng = np.random.default_rng(4242)
    for src in ["exp(-x)*(exp(-x) - 2)", "tanh(x) + 0.2*x^2",
                "sin(x)*cos(0.5*x)", "exp(-0.5*x^2)"]:
        p = parse_potential(src)
        for _ in range(25):
            x = float(rng.uniform(-1.5, 1.5))
            s = 3e-5
            fd = (p.deriv(3, x + s) - p.deriv(3, x - s)) / (2 * s)
            sym = p.deriv(4, x)
            assert abs(sym - fd) <= 2e-5 * max(1.0, abs(sym), abs(fd))


def test_linearity_property():
    rng = np.random.default_rng(11)
    xs = rng.uniform(-2, 2, size=16)
    for _ in range(100):
        a, b = _random_poly(rng), _random_poly(rng)
        pa, pb = parse_potential(a), parse_potential(b)
        psum = parse_potential(f"({a}) + ({b})")
        assert np.allclose(pa.value(xs) + pb.value(xs), psum.value(xs),
                           rtol=1e-12, atol=1e-12)


def test_eval_derivs_finite_guard():
    p = parse_potential("log(x)")
    with pytest.raises(EvalDomainError):
        eval_derivs(p, 0.0)


def test_deep_derivative_chain():
    # d4 of tanh stays evaluable and matches a finite difference
    p = parse_potential("tanh(x^2)")
    x = 0.6
    s = 2e-4
    fd2 = (p.deriv(3, x + s) - p.deriv(3, x - s)) / (2 * s)
    assert p.deriv(4, x) == pytest.approx(fd2, rel=1e-5)


def test_float_printing_roundtrip():
    p = parse_potential("0.1*x^2")
    q = parse_potential(to_source(p.ast))
    assert q.value(3.0) == p.value(3.0)
    assert math.isclose(p.value(3.0), 0.9, rel_tol=1e-15)
