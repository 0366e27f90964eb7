"""Characteristic functions of the eta-regular (P > 1) solution.

Each function depends on one angle only: V, r on the hyperbolic angle eta;
U, f on the polar angle theta; Z and the azimuth phi on t = w1/w2. All closed
forms are written with the jet-aware elementary functions of :mod:`deriv`, so
evaluating them on a one-variable :class:`~finsleroid.deriv.Jet2` gives exact
derivatives.

Closed forms used (constants absorbed into the normalization scalars):

    Lhat  = 1 - 1/P + H1^2 sinh^2(eta)
    R1    = cosh(eta) + sqrt(Lhat)
    J     = (H1 cosh(eta) + sqrt(Lhat))^H1
    Y1    = ((S1 cosh(eta) + sqrt(Lhat)) / sinh(eta))^S1
    V     = C1 J / R1,             r = C2check sinh(eta) Y1 / R1
    L9    = T Chat - Chat + (1 - T Chat) cos^2(theta)
    R2    = cos(theta) + sqrt(L9)
    Y2    = ((sqrt(L9) + k cos(theta)) / (sqrt(T Chat - Chat) sin(theta)))^k,  k = sqrt(1 - Chat)
    I     = (sqrt(1 - T Chat) cos(theta) + sqrt(L9))^sqrt(1 - T Chat)
    U     = C39 I / R2,            f = C17 sin(theta) Y2 / R2
    phi   = arctan(t) / sqrt(Chat) + Cstar,   Z = C11 sqrt(1 + t^2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import deriv as d
from .core import DomainError, Params
from .deriv import Jet2, value_of


def _check_eta(eta, allow_zero=False):
    v = value_of(eta)
    if not (v > 0.0 or (allow_zero and v == 0.0)) or not math.isfinite(v):
        raise DomainError(f"eta must be in (0, inf), got {v}")


def _check_theta(theta, p: Params):
    v = value_of(theta)
    if not 0.0 < v < p.theta_c:
        raise DomainError(f"theta must be in (0, theta_c = {p.theta_c:.15g}), got {v}")


# --- eta level -------------------------------------------------------------

def lhat(eta, p: Params):
    return 1.0 - 1.0 / p.P + p.H1**2 * d.sinh(eta) ** 2


def r1(eta, p: Params):
    return d.cosh(eta) + d.sqrt(lhat(eta, p))


def jfun(eta, p: Params):
    return (p.H1 * d.cosh(eta) + d.sqrt(lhat(eta, p))) ** p.H1


def y1(eta, p: Params):
    _check_eta(eta)
    return ((p.S1 * d.cosh(eta) + d.sqrt(lhat(eta, p))) / d.sinh(eta)) ** p.S1


def vcheck(eta, p: Params):
    return p.C1 * jfun(eta, p) / r1(eta, p)


def rcheck(eta, p: Params):
    _check_eta(eta)
    # sinh * Y1 regrouped so that eta -> 0 has no 0 * inf
    s = d.sinh(eta)
    base = p.S1 * d.cosh(eta) + d.sqrt(lhat(eta, p))
    return p.C2check * s ** (1.0 - p.S1) * base**p.S1 / r1(eta, p)


def v_max(p: Params) -> float:
    """V at eta = 0, the supremum of V over (0, inf)."""
    return float(vcheck(0.0, p))


def r_sup(p: Params) -> float:
    """Limit of r as eta -> inf; the cone F = 0 sits at r = r_sup."""
    return p.C2check * (p.S1 + p.H1) ** p.S1 / (1.0 + p.H1)


def log_v_rate(eta, p: Params):
    return -d.sinh(eta) / (p.H**2 * r1(eta, p))


def log_r_rate(eta, p: Params):
    return 1.0 / (p.P * d.sinh(eta) * r1(eta, p))


def log_j_rate(eta, p: Params):
    return p.H1**2 * d.sinh(eta) / d.sqrt(lhat(eta, p))


def log_y1_rate(eta, p: Params):
    return (1.0 / p.P - 1.0) / (d.sinh(eta) * d.sqrt(lhat(eta, p)))


# --- theta level -----------------------------------------------------------

def l9(theta, p: Params):
    tc = p.T * p.Chat
    return tc - p.Chat + (1.0 - tc) * d.cos(theta) ** 2


def r2(theta, p: Params):
    c = value_of(d.cos(theta))
    if c >= 0.0:
        return d.cos(theta) + d.sqrt(l9(theta, p))
    # L9 - cos^2 = Chat (T sin^2 - 1); avoids cancellation near theta_c
    return p.Chat * (p.T * d.sin(theta) ** 2 - 1.0) / (d.sqrt(l9(theta, p)) - d.cos(theta))


def _k2(p: Params) -> float:
    return math.sqrt(1.0 - p.Chat)


def y2(theta, p: Params):
    k = _k2(p)
    return ((d.sqrt(l9(theta, p)) + k * d.cos(theta))
            / (math.sqrt(p.T * p.Chat - p.Chat) * d.sin(theta))) ** k


def ifun(theta, p: Params):
    q = math.sqrt(1.0 - p.T * p.Chat)
    return (q * d.cos(theta) + d.sqrt(l9(theta, p))) ** q


def ucheck(theta, p: Params):
    return p.C39 * ifun(theta, p) / r2(theta, p)


def fcheck(theta, p: Params):
    k = _k2(p)
    base = (d.sqrt(l9(theta, p)) + k * d.cos(theta)) / math.sqrt(p.T * p.Chat - p.Chat)
    return p.C17 * d.sin(theta) ** (1.0 - k) * base**k / r2(theta, p)


def log_u_rate(theta, p: Params):
    return d.sin(theta) / (p.P * r2(theta, p))


def log_f_rate(theta, p: Params):
    return p.Chat / (d.sin(theta) * r2(theta, p))


def log_i_rate(theta, p: Params):
    return -(1.0 - p.T * p.Chat) * d.sin(theta) / d.sqrt(l9(theta, p))


def log_y2_rate(theta, p: Params):
    return -(1.0 - p.Chat) / (d.sqrt(l9(theta, p)) * d.sin(theta))


# --- phi level -------------------------------------------------------------

def phi_of_t(t, p: Params):
    return d.arctan(t) / math.sqrt(p.Chat) + p.Cstar


def t_of_phi(phi, p: Params):
    arg = math.sqrt(p.Chat) * (value_of(phi) - p.Cstar)
    if not -math.pi / 2 < arg < math.pi / 2:
        raise DomainError("sqrt(Chat) (phi - Cstar) outside (-pi/2, pi/2)")
    return d.tan(math.sqrt(p.Chat) * (phi - p.Cstar))


def zfun(t, p: Params):
    return p.C11 * d.sqrt(1.0 + t * t)


# --- profiles --------------------------------------------------------------

@dataclass(frozen=True)
class EtaProfile:
    eta: float
    Lhat: float
    R1: float
    J: float
    Y1: float
    Vcheck: float
    rcheck: float


@dataclass(frozen=True)
class ThetaProfile:
    theta: float
    L9: float
    R2: float
    Y2: float
    I: float
    Ucheck: float
    fcheck: float
    theta_c: float


@dataclass(frozen=True)
class PhiProfile:
    t: float
    phi: float
    Z: float


def eta_profile(eta: float, p: Params) -> EtaProfile:
    """All eta-level functions at one angle.

    ``eta = 0`` is accepted as a right limit: Y1 diverges there and is reported
    as ``inf`` while r is 0.
    """
    _check_eta(eta, allow_zero=True)
    eta = float(eta)
    if eta == 0.0:
        y1v, rv = math.inf, 0.0
    else:
        y1v, rv = float(y1(eta, p)), float(rcheck(eta, p))
    return EtaProfile(eta, float(lhat(eta, p)), float(r1(eta, p)), float(jfun(eta, p)),
                      y1v, float(vcheck(eta, p)), rv)


def eta_derivatives(eta: float, p: Params) -> tuple[float, float, float, float]:
    """(V_eta/V, r_eta/r, (ln J)_eta, (ln Y1)_eta) from the ODE list."""
    _check_eta(eta)
    return (float(log_v_rate(eta, p)), float(log_r_rate(eta, p)),
            float(log_j_rate(eta, p)), float(log_y1_rate(eta, p)))


def theta_profile(theta: float, p: Params) -> ThetaProfile:
    _check_theta(theta, p)
    theta = float(theta)
    return ThetaProfile(theta, float(l9(theta, p)), float(r2(theta, p)), float(y2(theta, p)),
                        float(ifun(theta, p)), float(ucheck(theta, p)), float(fcheck(theta, p)),
                        p.theta_c)


def theta_derivatives(theta: float, p: Params) -> tuple[float, float, float, float]:
    """(U_theta/U, f_theta/f, (ln I)_theta, (ln Y2)_theta) from the ODE list."""
    _check_theta(theta, p)
    return (float(log_u_rate(theta, p)), float(log_f_rate(theta, p)),
            float(log_i_rate(theta, p)), float(log_y2_rate(theta, p)))


def phi_and_Z(t: float, p: Params) -> PhiProfile:
    return PhiProfile(float(t), float(phi_of_t(t, p)), float(zfun(t, p)))


def class_one_lhat_zero(H: float, P: float) -> float | None:
    """Zero eta0 of the Class I function L = 1 - 1/P + (1 - 1/H^2) sinh^2(eta).

    Only a probe: for 0 < P < 1 the function is negative below eta0, which
    cuts the angle range. Returns ``None`` when L has no real zero (P >= 1).
    """
    if not H > 1.0:
        raise DomainError("H > 1 required")
    if not 0.0 < P < 1.0:
        return None
    return math.asinh(math.sqrt((1.0 / P - 1.0) / (1.0 - 1.0 / H**2)))


def class_one_lhat(eta, H: float, P: float):
    return 1.0 - 1.0 / P + (1.0 - 1.0 / H**2) * d.sinh(eta) ** 2


# --- characteristic-function sets ------------------------------------------

def derivs_by_jet(fn, x: float) -> tuple[float, float, float]:
    """(fn, fn', fn'') at ``x`` by evaluating ``fn`` on a one-variable jet."""
    j = fn(Jet2(x, _ONE.copy(), _ZERO.copy()))
    return j.value, float(j.grad[0]), float(j.hess[0, 0])


_ONE = np.ones(1)
_ZERO = np.zeros((1, 1))


class ClassTwo:
    """The exact eta-regular solution for one parameter set.

    The inverse-function nodes need (g, g', g'') for r and f; these come from
    the logarithmic ODE laws (g' = g q, g'' = g (q^2 + q')), with q' obtained
    by evaluating the rate law on a jet.
    """

    name = "exact"

    def __init__(self, p: Params):
        self.p = p

    def V(self, eta):
        return vcheck(eta, self.p)

    def r(self, eta):
        return rcheck(eta, self.p)

    def U(self, theta):
        return ucheck(theta, self.p)

    def f(self, theta):
        return fcheck(theta, self.p)

    def Z(self, t):
        return zfun(t, self.p)

    def phi(self, t):
        return phi_of_t(t, self.p)

    @property
    def theta_c(self) -> float:
        return self.p.theta_c

    def r_sup(self) -> float:
        return r_sup(self.p)

    def v_max(self) -> float:
        return v_max(self.p)

    def r_derivs(self, eta: float):
        rv = float(rcheck(eta, self.p))
        q, dq, _ = derivs_by_jet(lambda e: log_r_rate(e, self.p), eta)
        return rv, rv * q, rv * (q * q + dq)

    def f_derivs(self, theta: float):
        fv = float(fcheck(theta, self.p))
        q, dq, _ = derivs_by_jet(lambda t: log_f_rate(t, self.p), theta)
        return fv, fv * q, fv * (q * q + dq)

    def V_derivs(self, eta: float):
        vv = float(vcheck(eta, self.p))
        q, dq, _ = derivs_by_jet(lambda e: log_v_rate(e, self.p), eta)
        return vv, vv * q, vv * (q * q + dq)


class Perturbed(ClassTwo):
    """One characteristic function multiplied by a smooth factor.

    Used as a negative control: the verifier must flag it. ``which`` is one of
    ``"J"`` (equivalently V), ``"r"``, ``"U"``, ``"f"``; ``factor`` is a
    jet-aware callable of the function's own angle.
    """

    def __init__(self, p: Params, which: str, factor=None, eps: float = 0.01):
        super().__init__(p)
        if which not in ("J", "V", "r", "U", "f"):
            raise ValueError(f"cannot perturb {which!r}")
        self.which = "V" if which == "J" else which
        if factor is None:
            if self.which in ("V", "r"):
                factor = lambda x: 1.0 + eps * d.sinh(x)  # noqa: E731
            else:
                factor = lambda x: 1.0 + eps * d.sin(x)  # noqa: E731
        self.factor = factor
        self.name = f"perturbed-{which}"

    def V(self, eta):
        out = super().V(eta)
        return out * self.factor(eta) if self.which == "V" else out

    def r(self, eta):
        out = super().r(eta)
        return out * self.factor(eta) if self.which == "r" else out

    def U(self, theta):
        out = super().U(theta)
        return out * self.factor(theta) if self.which == "U" else out

    def f(self, theta):
        out = super().f(theta)
        return out * self.factor(theta) if self.which == "f" else out

    def r_sup(self) -> float:
        if self.which == "r":
            # factor grows without bound; keep the bracket search open
            return math.inf
        return super().r_sup()

    def r_derivs(self, eta):
        return derivs_by_jet(self.r, eta)

    def f_derivs(self, theta):
        return derivs_by_jet(self.f, theta)

    def V_derivs(self, eta):
        return derivs_by_jet(self.V, eta)
