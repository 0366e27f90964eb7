import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from finsleroid import deriv as d
from finsleroid.deriv import Jet2, inverse_jet, jet_eval, third_derivative


def fd_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        out[k] = (f(x + e) - f(x - e)) / (2 * h)
    return out


class TestJet2:
    def test_polynomial_exact(self):
        # f = x^2 y + 3 y^3: grad (2xy, x^2 + 9y^2), hess [[2y, 2x], [2x, 18y]]
        x, y = 1.5, -0.7
        j = jet_eval(lambda v: v[0] * v[0] * v[1] + 3.0 * v[1] ** 3, [x, y])
        assert_allclose(j.value, x * x * y + 3 * y**3)
        assert_allclose(j.grad, [2 * x * y, x * x + 9 * y * y])
        assert_allclose(j.hess, [[2 * y, 2 * x], [2 * x, 18 * y]])

    @pytest.mark.parametrize("name, f", [
        ("sin", math.sin), ("cos", math.cos), ("exp", math.exp), ("log", math.log),
        ("sqrt", math.sqrt), ("sinh", math.sinh), ("cosh", math.cosh), ("arctan", math.atan),
    ])
    def test_unary_against_fd(self, name, f):
        x0 = 0.8
        j = getattr(d, name)(Jet2(x0, np.ones(1), np.zeros((1, 1))))
        h = 1e-4
        second = (f(x0 + h) - 2 * f(x0) + f(x0 - h)) / h**2
        assert_allclose(j.value, f(x0))
        assert_allclose(j.grad[0], (f(x0 + h) - f(x0 - h)) / (2 * h), rtol=1e-7)
        assert_allclose(j.hess[0, 0], second, rtol=1e-5)

    def test_quotient_and_power(self):
        f = lambda v: (v[0] ** 1.7) / (1.0 + v[1] * v[1])  # noqa: E731
        x = np.array([1.3, 0.4])
        j = jet_eval(f, x)
        assert_allclose(j.grad, fd_grad(lambda z: f(list(z)), x), rtol=1e-8)

    def test_hessian_symmetric(self):
        j = jet_eval(lambda v: d.atan2(v[0], v[1]) * d.exp(v[2] * v[0]), [0.3, 0.9, -0.4])
        assert_allclose(j.hess, j.hess.T, atol=1e-15)

    def test_atan2_quadrants(self):
        for x, y in [(0.3, 0.5), (-0.3, 0.5), (0.3, -0.5), (-0.3, -0.5)]:
            j = jet_eval(lambda v: d.atan2(v[0], v[1]), [x, y])
            assert_allclose(j.value, math.atan2(x, y))
            r2 = x * x + y * y
            assert_allclose(j.grad, [y / r2, -x / r2])


class TestInverseJet:
    def test_inverse_of_cube(self):
        # g(s) = s^3, inverse x^(1/3); at x = 8, s = 2
        x = Jet2(8.0, np.ones(1), np.zeros((1, 1)))
        j = inverse_jet(x, 2.0, 3 * 4.0, 6 * 2.0)
        assert_allclose(j.grad[0], (1 / 3) * 8.0 ** (-2 / 3))
        assert_allclose(j.hess[0, 0], -(2 / 9) * 8.0 ** (-5 / 3))


class TestThirdDerivative:
    def test_cubic(self):
        # phi = x0^2 x1 + x1^3 / 3: the Hessian's derivative is constant
        def hess(x):
            return np.array([[2 * x[1], 2 * x[0]], [2 * x[0], 2 * x[1]]])
        D = third_derivative(hess, [0.4, 1.1])
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 1] = expected[0, 1, 0] = expected[1, 0, 0] = 2.0
        expected[1, 1, 1] = 2.0
        assert_allclose(D, expected, atol=1e-8)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            third_derivative(lambda x: np.eye(2), [1.0, 1.0], step=0.0)
