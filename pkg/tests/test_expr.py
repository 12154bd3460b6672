import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umbilic_lab.errors import ConfigInvalid
from umbilic_lab.expr import VectorExpression, parse


def test_precedence_and_unary_minus():
    e = parse("-x^2 + 2*y/4 - (x - y)", ["x", "y"])
    x, y = 1.5, -0.25
    assert e.eval({"x": x, "y": y}) == pytest.approx(-x ** 2 + 2 * y / 4 - (x - y))


def test_power_is_right_associative():
    e = parse("2^3^2", [])
    assert e.eval({}) == 2 ** 9


def test_functions_and_pi():
    e = parse("sin(pi/6) + cos(0) + exp(1) + sqrt(4)", [])
    assert e.eval({}) == pytest.approx(0.5 + 1 + math.e + 2)


@pytest.mark.parametrize("text", ["x +", "foo(x)", "x $ y", "(x", "x y", "z"])
def test_bad_input_raises_config_error(text):
    with pytest.raises(ConfigInvalid):
        parse(text, ["x", "y"])


def test_constant_folding_keeps_derivatives_small():
    e = parse("3*x + 2", ["x"])
    assert str(e.diff("x").diff("x")) in ("0.0", "0")


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_symbolic_gradient_matches_central_difference(x, y):
    vec = VectorExpression(["sin(x)*cos(y) + x^3", "exp(x*y)/(1 + y^2)", "sqrt(2 + x^2 + y^2)"], ["x", "y"])
    u = np.array([x, y])
    J = vec.jacobian(u)
    h = 1e-6
    fd = np.stack([(vec.value(u + h * e) - vec.value(u - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
    assert np.allclose(J, fd, atol=1e-6, rtol=1e-6)


def test_hessian_is_symmetric_and_exact_for_polynomial():
    vec = VectorExpression(["x^2*y + 3*x*y^2"], ["x", "y"])
    H = vec.hessian(np.array([0.7, -1.1]))[0]
    x, y = 0.7, -1.1
    assert np.allclose(H, [[2 * y, 2 * x + 6 * y], [2 * x + 6 * y, 6 * x]], atol=1e-14)


def test_vectorised_evaluation_broadcasts():
    vec = VectorExpression(["x + y", "1"], ["x", "y"])
    U = np.arange(12.0).reshape(6, 2)
    out = vec.value(U)
    assert out.shape == (6, 2)
    assert np.all(out[:, 1] == 1.0)
