"""Finsler geometry of the horizontal sections b = const.

On a section the metric function is r(v) = v3 U(theta(f)), f = C11 v_perp / v3,
homogeneous of degree one in v = (w1, w2, w3). Its metric tensor
R_ab = r r_ab + r_a r_b is positive definite and the unit surface r = 1 is a
round sphere of radius 1/sqrt(P) in the (theta, phi) chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import charfun as cf
from . import deriv as d
from .core import DomainError, OnAxisSection
from .deriv import Jet2, third_derivative, value_of
from .inversion import as_model, solve_increasing, theta_node


def _check_v(v):
    v1, v2, v3 = (value_of(x) for x in v)
    if not v3 > 0.0:
        raise OnAxisSection(f"v3 = {v3:g} <= 0")
    if v1 == 0.0 and v2 == 0.0:
        raise OnAxisSection("v_perp = 0")


def horizontal_pipeline(v, model) -> dict:
    """r, theta, phi, f, U of a section vector; components may be jets."""
    _check_v(v)
    p = model.p
    v1, v2, v3 = v
    vperp = d.sqrt(v1 * v1 + v2 * v2)
    f = p.C11 * vperp / v3
    theta = theta_node(f, model)
    U = model.U(theta)
    phi = d.atan2(v1, v2) / math.sqrt(p.Chat) + p.Cstar
    return dict(r=v3 * U, theta=theta, phi=phi, f=f, U=U, vperp=vperp)


def r_hat(v, p) -> float:
    model = as_model(p)
    return float(horizontal_pipeline([float(x) for x in v], model)["r"])


def section_metric(v, p) -> np.ndarray:
    """R_ab = (1/2) d^2 r^2 / dv^a dv^b."""
    model = as_model(p)
    r = horizontal_pipeline(Jet2.variables(v), model)["r"]
    return r.value * r.hess + np.outer(r.grad, r.grad)


@dataclass(frozen=True)
class HorizontalBundle:
    v: np.ndarray
    r: float
    r_a: np.ndarray
    r_ab: np.ndarray
    R: np.ndarray
    Rinv: np.ndarray
    h: np.ndarray
    theta: float
    phi: float
    theta_a: np.ndarray
    phi_a: np.ndarray
    f: float
    f_a: np.ndarray
    f_ab: np.ndarray
    C: np.ndarray | None = None
    Rstar: np.ndarray | None = None


def horizontal_bundle(v, p, cartan: bool = True, step: float | None = None) -> HorizontalBundle:
    model = as_model(p)
    v = np.asarray(v, dtype=float)
    out = horizontal_pipeline(Jet2.variables(v), model)
    r, th, ph, f = out["r"], out["theta"], out["phi"], out["f"]
    R = r.value * r.hess + np.outer(r.grad, r.grad)
    Rinv = np.linalg.inv(R)
    C = Rstar = None
    if cartan:
        C = 0.5 * third_derivative(lambda vv: section_metric(vv, model), v, step)
        Cup = np.einsum("fd,dbe->fbe", Rinv, C)
        # Rstar_bace = C_afc C^f_be - C_afe C^f_bc
        first = np.einsum("afc,fbe->bace", C, Cup)
        Rstar = first - first.transpose(0, 1, 3, 2)
    return HorizontalBundle(
        v=v, r=r.value, r_a=r.grad, r_ab=r.hess, R=R, Rinv=Rinv,
        h=R - np.outer(r.grad, r.grad), theta=th.value, phi=ph.value,
        theta_a=th.grad, phi_a=ph.grad, f=f.value, f_a=f.grad, f_ab=f.hess,
        C=C, Rstar=Rstar,
    )


def _rel(diff: np.ndarray, ref: np.ndarray) -> float:
    scale = np.linalg.norm(ref)
    return float(np.linalg.norm(diff) / scale) if scale > 0 else float(np.linalg.norm(diff))


def horizontal_curvature_model(hb: HorizontalBundle, P: float) -> np.ndarray:
    """(P - 1)(h_bc h_ae - h_be h_ac) / r^2 in bace order."""
    h = hb.h
    t = np.einsum("bc,ae->bace", h, h)
    return (P - 1.0) * (t - t.transpose(0, 1, 3, 2)) / hb.r**2


def horizontal_curvature_check(hb: HorizontalBundle, p) -> float:
    """Relative residual of r^2 R*_bace against (P - 1)(h h - h h)."""
    P = as_model(p).p.P
    target = hb.r**2 * horizontal_curvature_model(hb, P)
    return _rel(hb.r**2 * hb.Rstar - target, target)


def angle_form_h(hb: HorizontalBundle, p) -> np.ndarray:
    P = as_model(p).p.P
    th, ph = hb.theta_a, hb.phi_a
    return (np.outer(th, th) + math.sin(hb.theta) ** 2 * np.outer(ph, ph)) * hb.r**2 / P


def angle_form_check(hb: HorizontalBundle, p) -> float:
    return _rel(hb.h - angle_form_h(hb, p), hb.h)


def determinant_formula(theta: float, p) -> float:
    """det R_ab as a function of theta alone.

    I^6 / (P^2 Chat^3 Y2^4) (C11/C17)^4 C39^6.
    """
    pp = as_model(p).p
    I = float(cf.ifun(theta, pp))
    Y2 = float(cf.y2(theta, pp))
    return (I**6 / (pp.P**2 * pp.Chat**3 * Y2**4)
            * (pp.C11 / pp.C17) ** 4 * pp.C39**6)


def determinant_check(hb: HorizontalBundle, a=None, p=None) -> float:
    """Relative residual of det R_ab against :func:`determinant_formula`.

    ``a`` may supply the polar angle (an AngleTriple); otherwise the bundle's
    own theta is used.
    """
    theta = hb.theta if a is None else a.theta
    expected = determinant_formula(theta, p)
    return abs(np.linalg.det(hb.R) - expected) / abs(expected)


def axial_partials(w3: float, wperp: float, p) -> tuple[float, float]:
    """(dr/dw3, dr/dw_perp) of r = w3 U(theta(C11 w_perp / w3)), exact."""
    model = as_model(p)
    j3, jp = Jet2.variables([w3, wperp])
    f = model.p.C11 * jp / j3
    r = j3 * model.U(theta_node(f, model))
    return float(r.grad[0]), float(r.grad[1])


def axial_partials_closed_form(w3: float, wperp: float, p) -> tuple[float, float]:
    """The same partials written with U, I, Y2 at theta(f)."""
    model = as_model(p)
    pp = model.p
    theta = theta_node(pp.C11 * wperp / w3, model)
    U = float(model.U(theta))
    I = float(cf.ifun(theta, pp))
    Y2 = float(cf.y2(theta, pp))
    k = I**2 * pp.C11**2 * pp.T * pp.C39**2 / (Y2**2 * pp.C17**2)
    return U - k * wperp**2 / (U * w3**2), k * wperp / (U * w3)


# --- section radius and curvature -----------------------------------------------

def lambda_range(p) -> tuple[float, float]:
    """Open interval of section heights lambda that cut the cone F = 0 region.

    V decreases from V(0) to 0, so lambda V = 1 is solvable iff lambda > 1/V(0).
    """
    return 1.0 / as_model(p).v_max(), math.inf


def eta_of_section(lam: float, p) -> float:
    """eta* with V(eta*) = 1/lambda."""
    model = as_model(p)
    lo, _ = lambda_range(model)
    if not lam > lo:
        raise DomainError(f"lambda = {lam} outside ({lo:.15g}, inf): 1/lambda exceeds max V")

    def logderivs(eta):
        vv, v1, _ = model.V_derivs(eta)
        return 1.0 / vv, -v1 / vv**2

    return solve_increasing(logderivs, lam, 0.0, math.log(1e-200), math.log(300.0),
                            what="eta_of_section")


def section_radius(lam: float, p) -> float:
    """R_lambda = lambda * r(eta*) with V(eta*) = 1/lambda."""
    model = as_model(p)
    eta = eta_of_section(lam, model)
    return lam * float(model.r(eta))


def section_surface_metric(theta: float, phi: float, radius: float, p) -> np.ndarray:
    """Induced metric of the surface r(u) = radius at chart point (theta, phi)."""
    model = as_model(p)
    pp = model.p
    jt, jf = Jet2.variables([theta, phi])
    v3 = radius / model.U(jt)
    vperp = v3 * model.f(jt) / pp.C11
    beta = math.sqrt(pp.Chat) * (jf - pp.Cstar)
    u = [vperp * d.sin(beta), vperp * d.cos(beta), v3]
    tang = np.stack([x.grad for x in u], axis=1)  # (2, 3)
    R = section_metric([x.value for x in u], model)
    return tang @ R @ tang.T


def gaussian_curvature(metric, x0: float, x1: float, step: float = 1e-3) -> float:
    """Gaussian curvature of a 2D metric from its components alone (Brioschi)."""
    def comp(a, b):
        m = metric(a, b)
        return m[0, 0], m[0, 1], m[1, 1]

    h = step
    E, F, G = comp(x0, x1)
    pu, mu = comp(x0 + h, x1), comp(x0 - h, x1)
    pv, mv = comp(x0, x1 + h), comp(x0, x1 - h)
    pp_, pm = comp(x0 + h, x1 + h), comp(x0 + h, x1 - h)
    mp_, mm = comp(x0 - h, x1 + h), comp(x0 - h, x1 - h)
    Eu, Fu, Gu = ((a - b) / (2 * h) for a, b in zip(pu, mu))
    Ev, Fv, Gv = ((a - b) / (2 * h) for a, b in zip(pv, mv))
    Evv = (pv[0] - 2 * E + mv[0]) / h**2
    Guu = (pu[2] - 2 * G + mu[2]) / h**2
    Fuv = (pp_[1] - pm[1] - mp_[1] + mm[1]) / (4 * h * h)
    m1 = np.array([[-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
                   [Fv - 0.5 * Gu, E, F],
                   [0.5 * Gv, F, G]])
    m2 = np.array([[0.0, 0.5 * Ev, 0.5 * Gu],
                   [0.5 * Ev, E, F],
                   [0.5 * Gu, F, G]])
    return float((np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - F * F) ** 2)


def section_curvature(lam: float, p, theta: float | None = None, phi: float | None = None,
                      step: float = 1e-3) -> tuple[float, float]:
    """(measured Gaussian curvature, P / R_lambda^2) of the section indicatrix."""
    model = as_model(p)
    pp = model.p
    R = section_radius(lam, model)
    theta = 0.5 * pp.theta_c if theta is None else theta
    phi = pp.Cstar if phi is None else phi
    K = gaussian_curvature(lambda a, b: section_surface_metric(a, b, R, model), theta, phi, step)
    return K, pp.P / R**2
