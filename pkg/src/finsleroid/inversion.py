"""Tangent vectors <-> angle triples, and the metric function F.

The forward map y -> (eta, theta, phi) inverts f(theta) and r(eta)
numerically. Both are strictly increasing, so a bracketed Newton iteration in
the logarithm of the angle always converges. When the pipeline runs on jets,
the two inversions contribute their derivatives through the inverse-function
rule (see :func:`finsleroid.deriv.inverse_jet`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import deriv as d
from .charfun import ClassTwo
from .core import (ConvergenceError, DomainError, Frame, OnAxisSection,
                   OutsideBLikeRegion, Params, default_frame)
from .deriv import Jet2, inverse_jet, value_of

MAX_ITER = 60
XTOL = 1e-14

# eta beyond this saturates r to double precision for any admissible params
ETA_MAX = 300.0
ETA_MIN = 1e-200


def as_model(p) -> ClassTwo:
    """Accept either Params or a characteristic-function set."""
    if isinstance(p, Params):
        return ClassTwo(p)
    return p


@dataclass(frozen=True)
class AngleTriple:
    eta: float
    theta: float
    phi: float

    def as_tuple(self):
        return (self.eta, self.theta, self.phi)


def solve_increasing(logderivs, target: float, s0: float, s_lo: float, s_hi: float,
                     hi_open: bool = False, what: str = "x") -> float:
    """Root of an increasing function g(exp(s)) = target, returned as exp(s).

    ``logderivs(x)`` returns ``(g(x), g'(x))``. The iteration works on
    G(s) = ln g(e^s) - ln target, whose slope is x g'/g. The bracket starts at
    ``s0`` and expands by doubling steps towards ``s_lo`` / ``s_hi``; with
    ``hi_open`` the upper limit is never evaluated and is treated as G = +inf.
    Newton steps that leave the bracket fall back to bisection.
    """
    if not target > 0.0:
        raise DomainError(f"{what}: target must be positive, got {target}")
    ln_target = math.log(target)

    def G(s):
        x = math.exp(s)
        gv, g1 = logderivs(x)
        return math.log(gv) - ln_target, x * g1 / gv

    a, b = s_lo, s_hi
    Ga, Gb = -math.inf, math.inf
    g0, dg0 = G(s0)
    if g0 == 0.0:
        return math.exp(s0)
    step = 1.0
    if g0 < 0.0:
        a, Ga = s0, g0
        while True:
            nxt = a + step
            if nxt >= s_hi:
                if hi_open:
                    b = s_hi
                    break
                gb, _ = G(s_hi)
                if gb < 0.0:
                    raise ConvergenceError(f"{what}: no sign change up to the bracket limit",
                                           bracket=(math.exp(a), math.exp(s_hi)))
                b, Gb = s_hi, gb
                break
            gn, _ = G(nxt)
            if gn >= 0.0:
                b, Gb = nxt, gn
                break
            a, Ga = nxt, gn
            step *= 2.0
    else:
        b, Gb = s0, g0
        while True:
            nxt = b - step
            if nxt <= s_lo:
                gl, _ = G(s_lo)
                if gl > 0.0:
                    raise ConvergenceError(f"{what}: no sign change down to the bracket limit",
                                           bracket=(math.exp(s_lo), math.exp(b)))
                a, Ga = s_lo, gl
                break
            gn, _ = G(nxt)
            if gn <= 0.0:
                a, Ga = nxt, gn
                break
            b, Gb = nxt, gn
            step *= 2.0

    s = s0 if a < s0 < b else 0.5 * (a + b)
    gs, dgs = G(s)
    for it in range(MAX_ITER):
        if gs == 0.0:
            return math.exp(s)
        if gs < 0.0:
            a = s
        else:
            b = s
        newton = s - gs / dgs if dgs > 0.0 else math.nan
        if a < newton < b:
            s_new = newton
        else:
            s_new = 0.5 * (a + b)
        if abs(s_new - s) <= XTOL * max(1.0, abs(s)) or b - a <= XTOL * max(1.0, abs(s)):
            # one more Newton step: the bracket test can stop a few ulps short,
            # and callers difference the result at much finer scales
            gf, dgf = G(s_new)
            if gf != 0.0 and dgf > 0.0:
                s_new = min(max(s_new - gf / dgf, a), b)
            return math.exp(s_new)
        s = s_new
        gs, dgs = G(s)
    raise ConvergenceError(f"{what}: no convergence in {MAX_ITER} iterations",
                           bracket=(math.exp(a), math.exp(b)), iterations=MAX_ITER)


def theta_from_f(f: float, p) -> float:
    """Unique theta in (0, theta_c) with f(theta) = f."""
    model = as_model(p)
    f = float(f)
    if not f > 0.0 or not math.isfinite(f):
        raise DomainError(f"f must be positive and finite, got {f}")

    def logderivs(theta):
        fv, f1, _ = model.f_derivs(theta)
        return fv, f1

    tc = model.theta_c
    return solve_increasing(logderivs, f, math.log(0.5 * tc), math.log(1e-300),
                            math.log(tc), hi_open=True, what="theta_from_f")


def eta_from_r(r: float, p) -> float:
    """Unique eta in (0, inf) with r(eta) = r."""
    model = as_model(p)
    r = float(r)
    if not r > 0.0 or not math.isfinite(r):
        raise DomainError(f"r must be positive and finite, got {r}")
    if r >= model.r_sup():
        raise OutsideBLikeRegion(f"r = {r:.17g} >= sup r = {model.r_sup():.17g} (on or beyond the cone F = 0)")

    def logderivs(eta):
        rv, r1, _ = model.r_derivs(eta)
        return rv, r1

    return solve_increasing(logderivs, r, 0.0, math.log(ETA_MIN), math.log(ETA_MAX),
                            what="eta_from_r")


def theta_node(f, model):
    """theta as a function of f, jet-aware."""
    th = theta_from_f(value_of(f), model)
    if isinstance(f, Jet2):
        _, f1, f2 = model.f_derivs(th)
        return inverse_jet(f, th, f1, f2)
    return th


def eta_node(r, model):
    eta = eta_from_r(value_of(r), model)
    if isinstance(r, Jet2):
        _, r1, r2 = model.r_derivs(eta)
        return inverse_jet(r, eta, r1, r2)
    return eta


def _lin(cov, y):
    out = 0.0
    for c, v in zip(cov, y):
        if c != 0.0:
            out = out + float(c) * v
    return out


def tangent_pipeline(y, frame: Frame, model) -> dict:
    """All intermediate quantities of F at ``y``; components may be jets."""
    p = model.p
    b = _lin(frame.b, y)
    if not value_of(b) > 0.0:
        raise OutsideBLikeRegion(f"b = {value_of(b):g} <= 0")
    w1 = _lin(frame.i, y) / b
    w2 = _lin(frame.j, y) / b
    w3 = _lin(frame.i3, y) / b
    if not value_of(w3) > 0.0:
        raise OnAxisSection(f"w3 = {value_of(w3):g} <= 0")
    if value_of(w1) == 0.0 and value_of(w2) == 0.0:
        raise OnAxisSection("w_perp = 0")
    wperp = d.sqrt(w1 * w1 + w2 * w2)
    f = p.C11 * wperp / w3
    theta = theta_node(f, model)
    U = model.U(theta)
    r = w3 * U
    eta = eta_node(r, model)
    V = model.V(eta)
    F = b * V
    phi = d.atan2(w1, w2) / math.sqrt(p.Chat) + p.Cstar
    return dict(F=F, eta=eta, theta=theta, phi=phi, b=b, w1=w1, w2=w2, w3=w3,
                wperp=wperp, f=f, r=r, U=U, V=V)


def angles_from_tangent(y, frame: Frame | None = None, p=None):
    """(AngleTriple, F) of a tangent vector.

    phi comes from the full planar angle of (w1, w2): it equals
    arctan(w1/w2)/sqrt(Chat) + Cstar when w2 > 0 and continues smoothly to
    w2 <= 0.
    """
    frame = frame or default_frame()
    model = as_model(p)
    out = tangent_pipeline([float(v) for v in y], frame, model)
    return AngleTriple(out["eta"], out["theta"], float(out["phi"])), float(out["F"])


def metric_function(y, frame: Frame | None = None, p=None) -> float:
    return angles_from_tangent(y, frame, p)[1]


def _azimuth(phi, p: Params):
    beta = math.sqrt(p.Chat) * (phi - p.Cstar)
    if not -math.pi / 2 < value_of(beta) < math.pi / 2:
        raise DomainError("sqrt(Chat) (phi - Cstar) must lie in (-pi/2, pi/2)")
    return beta


def tangent_from_angles(a, bval, frame: Frame | None = None, p=None):
    """Tangent vector with b-value ``bval`` whose angles are ``a``.

    ``a`` may be an :class:`AngleTriple` or a sequence (eta, theta, phi) whose
    entries may be jets. w1 = w_perp sin(beta), w2 = w_perp cos(beta) with
    beta = sqrt(Chat)(phi - Cstar) restricted to (-pi/2, pi/2), so w2 > 0 and
    t = w1/w2 = tan(beta). On that chart this inverts angles_from_tangent.
    """
    frame = frame or default_frame()
    model = as_model(p)
    pp = model.p
    eta, theta, phi = a.as_tuple() if isinstance(a, AngleTriple) else a
    if not value_of(eta) > 0.0:
        raise DomainError("eta must be positive")
    if not 0.0 < value_of(theta) < model.theta_c:
        raise DomainError("theta must lie in (0, theta_c)")
    if not value_of(bval) > 0.0:
        raise DomainError("b must be positive")
    beta = _azimuth(phi, pp)
    w3 = model.r(eta) / model.U(theta)
    wperp = w3 * model.f(theta) / pp.C11
    w1 = wperp * d.sin(beta)
    w2 = wperp * d.cos(beta)
    return frame.compose(bval, w1, w2, w3)


def indicatrix_point(a, frame: Frame | None = None, p=None):
    """Unit vector l^i = y^i / F at the given angles."""
    model = as_model(p)
    eta = a.eta if isinstance(a, AngleTriple) else a[0]
    return tangent_from_angles(a, 1.0 / model.V(eta), frame, model)
