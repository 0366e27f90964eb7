"""Second-order forward-mode differentiation.

A :class:`Jet2` carries a value, its gradient and its Hessian with respect to
``n`` seed variables. Arithmetic and the elementary functions below propagate
all three exactly (chain rule to second order), so any closed-form pipeline
written with them yields exact first and second derivatives.

The elementary functions accept plain floats or numpy arrays as well and then
just forward to numpy, which lets the same closed forms serve grid sampling.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


class Jet2:
    __slots__ = ("value", "grad", "hess")
    __array_priority__ = 1000
    # make numpy scalars defer to the reflected jet operators
    __array_ufunc__ = None

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, value: float, n: int) -> "Jet2":
        return cls(value, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variables(cls, point) -> list["Jet2"]:
        """Seed jets x_k with unit gradients, one per component of ``point``."""
        point = np.asarray(point, dtype=float)
        n = point.size
        eye = np.eye(n)
        return [cls(point[k], eye[k].copy(), np.zeros((n, n))) for k in range(n)]

    @classmethod
    def linear(cls, covector, point) -> "Jet2":
        covector = np.asarray(covector, dtype=float)
        n = covector.size
        return cls(float(covector @ np.asarray(point, dtype=float)), covector.copy(), np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.grad.size

    def compose(self, value: float, d1: float, d2: float) -> "Jet2":
        """Jet of g(self) given g, g', g'' at ``self.value``."""
        g = self.grad
        return Jet2(value, d1 * g, d1 * self.hess + d2 * np.outer(g, g))

    def __repr__(self):
        return f"Jet2({self.value!r}, grad={self.grad!r})"

    def __float__(self):
        return self.value

    # arithmetic -----------------------------------------------------------

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        return Jet2(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)
        return Jet2(self.value - other, self.grad, self.hess)

    def __rsub__(self, other):
        return Jet2(other - self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            gg = np.outer(self.grad, other.grad)
            return Jet2(
                self.value * other.value,
                self.value * other.grad + other.value * self.grad,
                self.value * other.hess + other.value * self.hess + gg + gg.T,
            )
        return Jet2(self.value * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        v = self.value
        return self.compose(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return Jet2(self.value / other, self.grad / other, self.hess / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, Jet2):
            return exp(k * log(self))
        v = self.value
        if k == 2:
            return self * self
        return self.compose(v**k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    # comparisons act on values so jets can sit inside ordinary control flow
    def __lt__(self, other):
        return self.value < float(other)

    def __le__(self, other):
        return self.value <= float(other)

    def __gt__(self, other):
        return self.value > float(other)

    def __ge__(self, other):
        return self.value >= float(other)


def value_of(x):
    return x.value if isinstance(x, Jet2) else x


def _unary(np_func, rule):
    def func(x):
        if isinstance(x, Jet2):
            return x.compose(*rule(x.value))
        return np_func(x)

    func.__name__ = np_func.__name__
    return func


sqrt = _unary(np.sqrt, lambda v: (math.sqrt(v), 0.5 / math.sqrt(v), -0.25 / v**1.5))
exp = _unary(np.exp, lambda v: (math.exp(v),) * 3)
log = _unary(np.log, lambda v: (math.log(v), 1.0 / v, -1.0 / v**2))
sin = _unary(np.sin, lambda v: (math.sin(v), math.cos(v), -math.sin(v)))
cos = _unary(np.cos, lambda v: (math.cos(v), -math.sin(v), -math.cos(v)))
sinh = _unary(np.sinh, lambda v: (math.sinh(v), math.cosh(v), math.sinh(v)))
cosh = _unary(np.cosh, lambda v: (math.cosh(v), math.sinh(v), math.cosh(v)))
tan = _unary(np.tan, lambda v: (math.tan(v), 1.0 + math.tan(v) ** 2,
                                2.0 * math.tan(v) * (1.0 + math.tan(v) ** 2)))
arctan = _unary(np.arctan, lambda v: (math.atan(v), 1.0 / (1.0 + v * v),
                                      -2.0 * v / (1.0 + v * v) ** 2))


def atan2(y, x):
    """Planar angle of (x, y); jets propagate through both arguments."""
    if not isinstance(y, Jet2) and not isinstance(x, Jet2):
        return np.arctan2(y, x)
    yv, xv = value_of(y), value_of(x)
    n = y.n if isinstance(y, Jet2) else x.n
    if not isinstance(y, Jet2):
        y = Jet2.constant(yv, n)
    if not isinstance(x, Jet2):
        x = Jet2.constant(xv, n)
    r2 = xv * xv + yv * yv
    # first partials of atan2 wrt (y, x) and second partials
    dy, dx = xv / r2, -yv / r2
    dyy = -2.0 * xv * yv / r2**2
    dxx = 2.0 * xv * yv / r2**2
    dxy = (yv * yv - xv * xv) / r2**2
    gy, gx = y.grad, x.grad
    grad = dy * gy + dx * gx
    hess = (dy * y.hess + dx * x.hess + dyy * np.outer(gy, gy) + dxx * np.outer(gx, gx)
            + dxy * (np.outer(gy, gx) + np.outer(gx, gy)))
    return Jet2(math.atan2(yv, xv), grad, hess)


def jet_eval(pipeline: Callable, y) -> Jet2:
    """Value, gradient and Hessian of a scalar pipeline at ``y``.

    ``pipeline`` receives a list of seeded jets (one per component of ``y``)
    and must return a :class:`Jet2`.
    """
    out = pipeline(Jet2.variables(y))
    if not isinstance(out, Jet2):
        n = np.asarray(y).size
        out = Jet2.constant(float(out), n)
    return out


def default_step(y) -> float:
    scale = max(float(np.max(np.abs(np.asarray(y, dtype=float)))), 1e-300)
    return np.finfo(float).eps ** (1.0 / 3.0) * scale


def third_derivative(hessian: Callable, y, step: float | None = None) -> np.ndarray:
    """Central difference of an exact Hessian along each coordinate direction.

    Returns ``D[i, j, n] ~ d/dy^n hessian(y)[i, j]``, symmetrized over (i, j).
    For the Cartan tensor pass the Hessian of F**2 and multiply by 1/4.
    """
    y = np.asarray(y, dtype=float)
    if step is None:
        step = default_step(y)
    if not step > 0:
        raise ValueError("step must be positive")
    n = y.size
    out = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        out[:, :, k] = (np.asarray(hessian(y + e)) - np.asarray(hessian(y - e))) / (2.0 * step)
    return 0.5 * (out + out.transpose(1, 0, 2))


def inverse_jet(x: Jet2, root: float, d1: float, d2: float) -> Jet2:
    """Jet of the inverse function g^{-1}(x) given g', g'' at ``root``.

    Uses (g^{-1})' = 1/g' and (g^{-1})'' = -g''/g'^3, so no derivative of the
    iteration that produced ``root`` is ever taken.
    """
    return x.compose(root, 1.0 / d1, -d2 / d1**3)
