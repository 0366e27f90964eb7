"""Numerical verification of the full set of identities of the Class II metric.

Every identity is evaluated as a residual over a deterministic sampling plan
and summarized in an :class:`IdentityRecord`. Unless stated otherwise a
residual is |sum of terms| / max |term|, which makes pass/fail scale free.
Vanishing statements (X = 0) are normalized by a natural magnitude of the
quantity involved.

The expansion coefficients used here are *measured*: they are projections of
the exact angle Hessians of the metric under test onto the g-orthonormal
frame, and their angle derivatives are central differences of those
measurements. A perturbed set of characteristic functions therefore changes
every coefficient and the identities detect it.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import charfun as cf
from .charfun import ClassTwo, Perturbed, derivs_by_jet
from .core import FinsleroidError, Frame, Params, default_frame, default_params
from .deriv import Jet2
from .horizontal import (angle_form_check, axial_partials, axial_partials_closed_form,
                         determinant_check, horizontal_bundle, horizontal_curvature_check,
                         lambda_range, section_curvature)
from .inversion import AngleTriple, as_model, tangent_from_angles
from .tensors import (NULLIFIED, CoeffSet, angle_form_metric, bundle_at, cartan_expansion,
                      coefficients_at, constant_curvature_model, curvature_frame_expansion,
                      expected_indicatrix_metric, frame_form_metric, indicatrix_induced_metric,
                      particular_expansions, projected_coefficients)

TOL_ANALYTIC = 1e-9
TOL_FD1 = 1e-6
TOL_FD2 = 1e-4
TOL_ODE = 1e-7


# --- records -------------------------------------------------------------------

@dataclass
class IdentityRecord:
    id: str
    statement: str
    max_residual: float
    tolerance: float
    points: int
    status: str
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class SamplingPlan:
    n_eta: int = 24
    eta_min: float = 1e-2
    eta_max: float = 6.0
    n_theta: int = 16
    theta_margin: float = 0.05
    n_phi: int = 8
    phi_margin: float = 0.05
    seed: int = 0
    n_tensor: int = 24
    n_horizontal: int = 24
    n_ode: int = 128
    ode_eta_min: float = 1e-3
    ode_eta_max: float = 10.0
    lambdas: tuple = (0.5, 1.0, 2.0)
    # draw tensor and horizontal points from the continuous ranges instead of the grids
    continuous: bool = False

    def eta_grid(self) -> np.ndarray:
        if self.n_eta <= 0:
            return np.empty(0)
        return np.geomspace(self.eta_min, self.eta_max, self.n_eta)

    def theta_grid(self, p: Params) -> np.ndarray:
        if self.n_theta <= 0:
            return np.empty(0)
        return np.linspace(self.theta_margin, p.theta_c - self.theta_margin, self.n_theta)

    def phi_grid(self, p: Params) -> np.ndarray:
        if self.n_phi <= 0:
            return np.empty(0)
        half = math.pi / 2 - self.phi_margin
        return p.Cstar + np.linspace(-half, half, self.n_phi) / math.sqrt(p.Chat)

    def is_empty(self) -> bool:
        return min(self.n_eta, self.n_theta, self.n_phi) <= 0

    def angle_points(self, p: Params) -> list[AngleTriple]:
        """The eta x theta product grid, each pair with one phi from the phi-grid."""
        etas, thetas, phis = self.eta_grid(), self.theta_grid(p), self.phi_grid(p)
        if self.is_empty():
            return []
        rng = np.random.default_rng(self.seed)
        pick = rng.integers(0, phis.size, size=etas.size * thetas.size)
        pts = []
        for k, (e, t) in enumerate((e, t) for e in etas for t in thetas):
            pts.append(AngleTriple(float(e), float(t), float(phis[pick[k]])))
        return pts

    def tensor_points(self, p: Params) -> list[AngleTriple]:
        etas, thetas, phis = self.eta_grid(), self.theta_grid(p), self.phi_grid(p)
        if self.is_empty() or self.n_tensor <= 0:
            return []
        rng = np.random.default_rng(self.seed + 1)
        if self.continuous:
            return [AngleTriple(*self._draw_angles(rng, p)) for _ in range(self.n_tensor)]
        total = etas.size * thetas.size * phis.size
        idx = rng.choice(total, size=min(self.n_tensor, total), replace=False)
        out = []
        for k in sorted(idx):
            i, rest = divmod(int(k), thetas.size * phis.size)
            j, l = divmod(rest, phis.size)
            out.append(AngleTriple(float(etas[i]), float(thetas[j]), float(phis[l])))
        return out

    def horizontal_points(self, p: Params, model=None) -> list[np.ndarray]:
        """Section vectors spread over the (theta, phi) grid with random scale."""
        model = model or ClassTwo(p)
        thetas, phis = self.theta_grid(p), self.phi_grid(p)
        if thetas.size == 0 or phis.size == 0 or self.n_horizontal <= 0:
            return []
        rng = np.random.default_rng(self.seed + 2)
        out = []
        for _ in range(self.n_horizontal):
            if self.continuous:
                _, th, ph = self._draw_angles(rng, p)
            else:
                th = float(thetas[rng.integers(thetas.size)])
                ph = float(phis[rng.integers(phis.size)])
            out.append(section_vector(th, ph, float(rng.uniform(0.5, 2.0)), model))
        return out

    def _draw_angles(self, rng, p: Params) -> tuple[float, float, float]:
        """eta log-uniform, theta and phi uniform, all inside the plan margins."""
        eta = math.exp(rng.uniform(math.log(self.eta_min), math.log(self.eta_max)))
        theta = rng.uniform(self.theta_margin, p.theta_c - self.theta_margin)
        half = math.pi / 2 - self.phi_margin
        phi = p.Cstar + rng.uniform(-half, half) / math.sqrt(p.Chat)
        return float(eta), float(theta), float(phi)

    def ode_eta_grid(self) -> np.ndarray:
        if self.n_ode <= 0:
            return np.empty(0)
        return np.geomspace(self.ode_eta_min, self.ode_eta_max, self.n_ode)

    def ode_theta_grid(self, p: Params) -> np.ndarray:
        if self.n_ode <= 0:
            return np.empty(0)
        return np.linspace(self.theta_margin, p.theta_c - self.theta_margin, self.n_ode)

    def margins(self) -> dict:
        return {"eta_min": self.eta_min, "theta": self.theta_margin, "phi_azimuth": self.phi_margin}

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambdas"] = list(self.lambdas)
        return out


def section_vector(theta: float, phi: float, scale: float, model) -> np.ndarray:
    """v with r(v) = scale at chart point (theta, phi)."""
    p = model.p
    v3 = scale / float(model.U(theta))
    vperp = v3 * float(model.f(theta)) / p.C11
    beta = math.sqrt(p.Chat) * (phi - p.Cstar)
    return np.array([vperp * math.sin(beta), vperp * math.cos(beta), v3])


class _Collector:
    def __init__(self):
        self.entries: dict[str, dict] = {}

    def add(self, rid: str, statement: str, tol: float, residual: float, note: str = ""):
        e = self.entries.setdefault(rid, dict(statement=statement, tol=tol, res=[], note=note))
        r = float(residual)
        e["res"].append(r if math.isfinite(r) else math.inf)

    def records(self) -> list[IdentityRecord]:
        out = []
        for rid, e in self.entries.items():
            mx = max(e["res"]) if e["res"] else 0.0
            out.append(IdentityRecord(rid, e["statement"], mx, e["tol"], len(e["res"]),
                                      "pass" if mx < e["tol"] else "fail", e["note"]))
        return out


def indicatrix_residual(ind: np.ndarray, expected: np.ndarray) -> float:
    """max |i_ab - e_ab| / sqrt(e_aa e_bb), i.e. the error in the orthonormal angle frame."""
    d = np.sqrt(np.diag(expected))
    return float(np.max(np.abs(ind - expected) / np.outer(d, d)))


def balance(*terms) -> float:
    """|sum| / max |term|; zero when every term vanishes."""
    terms = [float(t) for t in terms]
    scale = max(abs(t) for t in terms)
    if scale == 0.0:
        return 0.0
    return abs(sum(terms)) / scale


def vanish(value, *scales) -> float:
    scale = max(abs(float(s)) for s in scales)
    if scale == 0.0:
        return abs(float(value))
    return abs(float(value)) / scale


def rel_norm(diff, ref) -> float:
    n = float(np.linalg.norm(ref))
    return float(np.linalg.norm(diff)) / n if n > 0 else float(np.linalg.norm(diff))


# --- measured coefficients --------------------------------------------------------

def measured_coefficients(a: AngleTriple, model, frame: Frame) -> dict:
    y = tangent_from_angles(a, 1.0, frame, model)
    b = bundle_at(np.asarray(y, dtype=float), frame, model, cartan=False)
    return projected_coefficients(b)


def _steps(a: AngleTriple, p: Params, rel: float = 1e-2) -> tuple[float, float, float]:
    he = rel * min(a.eta, 1.0)
    ht = rel * min(a.theta, p.theta_c - a.theta, 1.0)
    beta = math.sqrt(p.Chat) * (a.phi - p.Cstar)
    hp = rel * min(1.0, (math.pi / 2 - abs(beta)) / math.sqrt(p.Chat))
    return he, ht, hp


@dataclass
class PointData:
    """Measured coefficients at one angle point and their angle derivatives."""

    a: AngleTriple
    c: dict
    d_eta: dict
    d_theta: dict
    d_phi: dict


_FACTORS = {
    "z2check": lambda a: math.sinh(a.eta) ** 2,
    "z3check": lambda a: math.sinh(a.eta) ** 2,
    "r1sh2": lambda a: math.sinh(a.eta) ** 2,
    "r2sh2": lambda a: math.sinh(a.eta) ** 2,
    "r5s": lambda a: math.sin(a.theta),
    "r2s2": lambda a: math.sin(a.theta) ** 2,
}
_BASE = {"z2check": "z2", "z3check": "z3", "r1sh2": "r1", "r2sh2": "r2", "r5s": "r5", "r2s2": "r2"}


def _with_products(c: dict, a: AngleTriple) -> dict:
    out = dict(c)
    for k, fac in _FACTORS.items():
        out[k] = c[_BASE[k]] * fac(a)
    return out


def point_data(a: AngleTriple, model, frame: Frame) -> PointData:
    """Coefficients at ``a`` and their fourth-order central differences in each angle."""
    p = model.p
    steps = _steps(a, p)
    base = _with_products(measured_coefficients(a, model, frame), a)
    derivs = []
    for k, h in enumerate(steps):
        vals = {}
        for m in (-2, -1, 1, 2):
            x = list(a.as_tuple())
            x[k] += m * h
            shifted = AngleTriple(*x)
            vals[m] = _with_products(measured_coefficients(shifted, model, frame), shifted)
        derivs.append({key: (8.0 * (vals[1][key] - vals[-1][key]) - (vals[2][key] - vals[-2][key])) / (12.0 * h)
                       for key in base})
    d_eta, d_theta, d_phi = derivs
    return PointData(a, base, d_eta, d_theta, d_phi)


# --- characteristic-function derivatives -------------------------------------------

@dataclass
class ChainData:
    """Derivatives of the characteristic functions with respect to their own arguments."""

    V: float
    V_r: float
    V_rr: float
    eta_V: float
    eta_VV: float
    eta_r: float
    r: float
    U: float
    U_f: float
    U_ff: float
    f: float
    theta_f: float
    theta_ff: float
    t: float
    phi_t: float
    phi_tt: float
    Z: float
    Z_t: float
    Z_tt: float
    w2: float
    w3: float
    c2: float


def chain_data(a: AngleTriple, model) -> ChainData:
    p = model.p
    V, V1, V2 = derivs_by_jet(model.V, a.eta)
    r, r1, r2 = derivs_by_jet(model.r, a.eta)
    U, U1, U2 = derivs_by_jet(model.U, a.theta)
    f, f1, f2 = derivs_by_jet(model.f, a.theta)
    beta = math.sqrt(p.Chat) * (a.phi - p.Cstar)
    t = math.tan(beta)
    phi_t, phi_tt = (derivs_by_jet(lambda x: cf.phi_of_t(x, p), t))[1:]
    Z, Z_t, Z_tt = derivs_by_jet(lambda x: cf.zfun(x, p), t)
    w3 = r / U
    wperp = w3 * f / p.C11
    w2 = wperp * math.cos(beta)
    return ChainData(
        V=V, V_r=V1 / r1, V_rr=(V2 * r1 - V1 * r2) / r1**3,
        eta_V=1.0 / V1, eta_VV=-V2 / V1**3, eta_r=1.0 / r1, r=r,
        U=U, U_f=U1 / f1, U_ff=(U2 * f1 - U1 * f2) / f1**3,
        f=f, theta_f=1.0 / f1, theta_ff=-f2 / f1**3,
        t=t, phi_t=phi_t, phi_tt=phi_tt, Z=Z, Z_t=Z_t, Z_tt=Z_tt,
        w2=w2, w3=w3, c2=w2 / w3,
    )


# --- identity groups ------------------------------------------------------------------

def _skew(col: _Collector, d: PointData, H2: float):
    a, c, de, dt, dp = d.a, d.c, d.d_eta, d.d_theta, d.d_phi
    sh, ch = math.sinh(a.eta), math.cosh(a.eta)
    s, co = math.sin(a.theta), math.cos(a.theta)
    u2, u6, z2, z3, z4, r1, r2, r5 = (c[k] for k in ("u2", "u6", "z2", "z3", "z4", "r1", "r2", "r5"))
    col.add("skew.u-angle-independence", "u2 and u6 depend on eta only", TOL_FD1,
            max(vanish(dt["u2"], de["u2"], u2), vanish(dp["u2"], de["u2"], u2),
                vanish(dt["u6"], de["u6"], u6), vanish(dp["u6"], de["u6"], u6)))
    col.add("skew.u2-riccati", "u2_eta + u2 (u2 - u6) / H^2 = 1", TOL_FD1,
            balance(de["u2"], u2 * u2 / H2, -u2 * u6 / H2, -1.0))
    col.add("skew.z4-r5-angle-independence", "z4_theta = z4_phi = 0, (r5 sin)_theta = r5_phi = 0", TOL_FD1,
            max(vanish(dt["z4"], de["z4"], z4), vanish(dp["z4"], de["z4"], z4),
                vanish(dt["r5s"], de["r5"] * s, r5 * s), vanish(dp["r5"], de["r5"], r5)))
    col.add("skew.z-eta-scaling", "z3_phi = 0, z_eta sinh + 2 z cosh = 0 for z2 and z3", TOL_FD1,
            max(vanish(dp["z3"], dt["z3"], z3), balance(de["z2"] * sh, 2 * z2 * ch),
                balance(de["z3"] * sh, 2 * z3 * ch)))
    col.add("skew.z2-theta-law", "z2_theta - z4 u2 sinh / H^2 + z2 (z2 - z3) sinh^2 / H^2 = 1", TOL_FD1,
            balance(dt["z2"], -z4 * u2 * sh / H2, z2 * z2 * sh**2 / H2, -z2 * z3 * sh**2 / H2, -1.0))
    col.add("skew.z4-eta-law", "z4_eta sinh + z4 cosh + z4 (u6 sinh - z4 sinh^2) / H^2 = -1", TOL_FD1,
            balance(de["z4"] * sh, z4 * ch, z4 * u6 * sh / H2, -z4 * z4 * sh**2 / H2, 1.0))
    col.add("skew.zcheck-eta-independence", "(z2 sinh^2)_eta = (z3 sinh^2)_eta = 0", TOL_FD1,
            max(vanish(de["z2check"], z2 * sh**2, de["z2"] * sh**2),
                vanish(de["z3check"], z3 * sh**2, de["z3"] * sh**2)))
    scale_r = max(abs(r1), abs(r5)) * sh**2
    col.add("skew.r2-vanishing-laws", "(r2 sinh^2)_eta = 0, (r2 sin^2)_theta = 0, r1_phi = 0", TOL_FD1,
            max(vanish(de["r2sh2"], scale_r), vanish(dt["r2s2"], scale_r),
                vanish(dp["r1"], r1, de["r1"], dt["r1"])))
    col.add("skew.r1-theta-law",
            "r1_theta sin + r1 (cos - r1 sinh^2 sin^2 / H^2 + z3 sinh^2 sin / H^2) + r5 u2 sinh sin / H^2 = -1",
            TOL_FD1,
            balance(dt["r1"] * s, r1 * co, -r1 * r1 * sh**2 * s**2 / H2, r1 * z3 * sh**2 * s / H2,
                    r5 * u2 * sh * s / H2, 1.0),
            note="derived from symmetry of the third derivatives of phi")
    col.add("skew.r5-eta-law",
            "r5_eta sinh sin + r5 (u6 sinh sin / H^2 - r5 sinh^2 sin^2 / H^2 + cosh sin) = -1", TOL_FD1,
            balance(de["r5"] * sh * s, r5 * u6 * sh * s / H2, -r5 * r5 * sh**2 * s**2 / H2, r5 * ch * s, 1.0))


def _symmetrizing(col: _Collector, d: PointData, H2: float):
    a, c = d.a, d.c
    sh, ch = math.sinh(a.eta), math.cosh(a.eta)
    s, co = math.sin(a.theta), math.cos(a.theta)
    col.add("sym.z4-from-u3", "z4 sinh^2 = u3 sinh - 2 H^2 cosh", TOL_ANALYTIC * 1e3,
            balance(c["z4"] * sh**2, -c["u3"] * sh, 2 * H2 * ch))
    col.add("sym.r5-from-u2", "r5 sinh^2 sin = u2 sinh - 2 H^2 cosh", TOL_ANALYTIC * 1e3,
            balance(c["r5"] * sh**2 * s, -c["u2"] * sh, 2 * H2 * ch))
    col.add("sym.z2-from-r1", "z2 sinh^2 sin = r1 sinh^2 sin^2 + 2 H^2 cos", TOL_ANALYTIC * 1e3,
            balance(c["z2"] * sh**2 * s, -c["r1"] * sh**2 * s**2, -2 * H2 * co))
    col.add("sym.r1-eta-scaling", "(r1 sinh^2)_eta = 0", TOL_FD1,
            vanish(d.d_eta["r1sh2"], c["r1"] * sh**2, d.d_eta["r1"] * sh**2))


def _measured_coeffset(c: dict, a: AngleTriple, H2: float) -> CoeffSet:
    sh, ch = math.sinh(a.eta), math.cosh(a.eta)
    s, co = math.sin(a.theta), math.cos(a.theta)
    z2c, z3c = c["z2"] * sh**2, c["z3"] * sh**2
    return CoeffSet(
        u2=c["u2"], u3=c["u3"], u6=c["u6"], z2=c["z2"], z3=c["z3"], z4=c["z4"],
        r1=c["r1"], r2=c["r2"], r5=c["r5"],
        L2=c["u2"] - H2 * ch / sh, L3=c["u3"] - H2 * ch / sh,
        L=(c["r1"] * sh**2 * s + H2 * co / s) / sh,
        z2check=z2c, z3check=z3c, L2check=z2c - H2 * co / s,
    )


def _curvature_scalars(col: _Collector, d: PointData, p: Params):
    H2 = p.H**2
    a = d.a
    sh, ch = math.sinh(a.eta), math.cosh(a.eta)
    s, co = math.sin(a.theta), math.cos(a.theta)
    m = _measured_coeffset(d.c, a, H2)
    Ts = 1.0 - H2
    cot = H2 * co / s
    tol = TOL_ANALYTIC * 1e3
    col.add("curv.L2-equals-L3", "L2 = L3", tol, balance(m.L2, -m.L3))
    col.add("curv.u3-equals-u2", "u3 = u2", tol, balance(m.u3, -m.u2))
    col.add("curv.L-relation", "L2 (u6 - 2 L2) = L (z3 sinh - L)", tol,
            balance(m.L2 * m.u6, -2 * m.L2**2, -m.L * m.z3 * sh, m.L**2))
    col.add("curv.Tstar-value", "1 - H^2 = -(L2^2 + L2 (u6 - 2 L2)) / H^2", tol,
            balance(Ts, m.L2**2 / H2, m.L2 * m.u6 / H2, -2 * m.L2**2 / H2))
    col.add("curv.z4-r5", "z4 = r5 sin", tol, balance(m.z4, -m.r5 * s))
    col.add("curv.L-z3", "L z3 sinh = -H^2 T* - L2^2 + L^2", tol,
            balance(m.L * m.z3 * sh, H2 * Ts, m.L2**2, -m.L**2))
    q = m.z2check - cot
    col.add("curv.zcheck-quadratic", "(z2c - H^2 cot)^2 - (z2c - H^2 cot) z3c - (H^2 T* + L2^2) sinh^2 = 0",
            tol, balance(q * q, -q * m.z3check, -H2 * Ts * sh**2, -m.L2**2 * sh**2))
    col.add("curv.zcheck-quadratic-explicit", "(z2c - H^2 cot)^2 - (z2c - H^2 cot) z3c = (1 - 1/P) H^4",
            tol, balance(q * q, -q * m.z3check, -(1 - 1 / p.P) * H2 * H2))
    col.add("curv.L2check-relation", "L2c (L2c - z3c) / H^4 = 1 - 1/P", tol,
            balance(m.L2check**2 / H2**2, -m.L2check * m.z3check / H2**2, -(1 - 1 / p.P)))
    col.add("curv.L2-closed", "(L2 / H)^2 = H^2 - 1 - H^2 (1 - P) / (P sinh^2)", tol,
            balance(m.L2**2 / H2, -H2, 1.0, H2 * (1 - p.P) / (p.P * sh**2)))
    L2_eta = d.d_eta["u2"] + H2 / sh**2
    col.add("curv.L2-ode", "L2 L2_eta = (H^2 (H^2 - 1) - L2^2) cosh / sinh", TOL_FD1,
            balance(m.L2 * L2_eta, -H2 * (H2 - 1) * ch / sh, m.L2**2 * ch / sh))
    col.add("curv.zcheck-theta-law",
            "z2c_theta + z2c (z2c - z3c) / H^2 = sinh^2 + (u2 sinh - 2 H^2 cosh) u2 sinh / H^2", TOL_FD1,
            balance(d.d_theta["z2check"], m.z2check**2 / H2, -m.z2check * m.z3check / H2, -sh**2,
                    -(m.u2 * sh - 2 * H2 * ch) * m.u2 * sh / H2))
    col.add("expand.nullified", "u1 = u4 = u5 = z1 = z5 = z6 = r3 = r4 = r6 = 0", TOL_FD1,
            max(vanish(d.c[k], d.c["u2"], d.c["u6"], d.c["z2"], d.c["z3"], d.c["r1"]) for k in NULLIFIED))
    closed = coefficients_at(a, p)
    col.add("expand.closed-coefficients", "measured coefficients equal the closed forms", TOL_FD1,
            max(vanish(d.c[k] - getattr(closed, k), getattr(closed, k), d.c[k])
                for k in ("u2", "u3", "u6", "z2", "z3", "z4", "r1", "r5")))


def _structural(col: _Collector, d: PointData, ch_: ChainData, p: Params):
    H2 = p.H**2
    a, c, x = d.a, d.c, ch_
    sh, s = math.sinh(a.eta), math.sin(a.theta)
    tol = TOL_ANALYTIC * 1e3
    col.add("struct.eta-VV", "(eta_VV - u6 eta_V^2 / H^2 + 2 eta_V / V) V_r^2 + eta_V V_rr = 0", tol,
            balance(x.eta_VV * x.V_r**2, -c["u6"] * x.eta_V**2 * x.V_r**2 / H2,
                    2 * x.eta_V * x.V_r**2 / x.V, x.eta_V * x.V_rr))
    col.add("struct.eta-phi-phi", "u2 sinh^2 sin^2 phi_t^2 / H^2 = eta_V V_r U_f Z_tt w2", tol,
            balance(c["u2"] * sh**2 * s**2 * x.phi_t**2 / H2, -x.eta_V * x.V_r * x.U_f * x.Z_tt * x.w2))
    col.add("struct.eta-theta-theta", "u3 sinh^2 theta_f^2 / H^2 = eta_V z U_ff V_r", tol,
            balance(c["u3"] * sh**2 * x.theta_f**2 / H2, -x.eta_V * x.w3 * x.U_ff * x.V_r))
    col.add("struct.theta-ff", "theta_ff = (z3 sinh^2 theta_f / H^2 - 2 U_f / U) theta_f", tol,
            balance(x.theta_ff, -c["z3"] * sh**2 * x.theta_f**2 / H2, 2 * x.U_f * x.theta_f / x.U))
    col.add("struct.theta-phi-phi", "z2 sinh^2 sin^2 phi_t^2 / H^2 = theta_f c2 Z_tt", tol,
            balance(c["z2"] * sh**2 * s**2 * x.phi_t**2 / H2, -x.theta_f * x.c2 * x.Z_tt))
    col.add("struct.theta-eta-mixed", "(z4 sinh eta_V / H^2 - 1/V) z V_r + 1/U = 0", tol,
            balance(c["z4"] * sh * x.eta_V * x.w3 * x.V_r / H2, -x.w3 * x.V_r / x.V, 1.0 / x.U))
    col.add("struct.phi-tt", "phi_tt = -2 Z_t phi_t / Z + r2 sinh^2 sin^2 phi_t^2 / H^2", tol,
            balance(x.phi_tt, 2 * x.Z_t * x.phi_t / x.Z, -c["r2"] * sh**2 * s**2 * x.phi_t**2 / H2))
    col.add("struct.phi-theta-mixed", "r1 sinh^2 sin theta_f / H^2 - U_f / U + 1/f = 0", tol,
            balance(c["r1"] * sh**2 * s * x.theta_f / H2, -x.U_f / x.U, 1.0 / x.f))
    col.add("struct.phi-eta-mixed", "(r5 sinh sin eta_V / H^2 - 1/V) r V_r + 1 = 0", tol,
            balance(c["r5"] * sh * s * x.eta_V * x.r * x.V_r / H2, -x.r * x.V_r / x.V, 1.0))


def _separation(col: _Collector, d: PointData, x: ChainData, p: Params):
    H2 = p.H**2
    a, c = d.a, d.c
    sh, chh = math.sinh(a.eta), math.cosh(a.eta)
    s = math.sin(a.theta)
    C, C7 = p.C, p.C7
    R1 = float(cf.r1(a.eta, p))
    R2 = float(cf.r2(a.theta, p))
    tol = TOL_ANALYTIC * 1e3
    col.add("sep.theta-split", "theta_f f = z2 C sinh^2 sin^2 / H^2", tol,
            balance(x.theta_f * x.f, -c["z2"] * C * sh**2 * s**2 / H2))
    col.add("sep.phi-split", "phi_t^2 = C Z_tt / Z", TOL_ANALYTIC,
            balance(x.phi_t**2, -C * x.Z_tt / x.Z))
    col.add("sep.theta-f-R2", "theta_f f = R2 C sin", tol, balance(x.theta_f * x.f, -R2 * C * s))
    col.add("sep.U-second", "C U_ff sin^2 = U_f f theta_f^2", tol,
            balance(C * x.U_ff * s**2, -x.U_f * x.f * x.theta_f**2))
    col.add("sep.u2-eta-r", "u2 sinh^2 / H^2 = C7 eta_r r", tol,
            balance(c["u2"] * sh**2 / H2, -C7 * x.eta_r * x.r))
    col.add("sep.U-log-rate", "U_f f / (U C) = C7 sin^2", tol,
            balance(x.U_f * x.f / (x.U * C), -C7 * s**2))
    col.add("sep.V-mixed", "(u2 - 2 H^2 coth) eta_r r / H^2 - V_r r / V + 1 = 0", tol,
            balance(c["u2"] * x.eta_r * x.r / H2, -2 * chh / sh * x.eta_r * x.r, -x.V_r * x.r / x.V, 1.0))
    col.add("sep.V-log-rate", "V_r r / V = -sinh^2 / (C7 H^2) - 1 / (C7 P) + 1", tol,
            balance(x.V_r * x.r / x.V, sh**2 / (C7 * H2), 1.0 / (C7 * p.P), -1.0))
    col.add("sep.R1-u2", "u2 sinh / H^2 = R1", tol, balance(c["u2"] * sh / H2, -R1))
    col.add("sep.eta-r-rate", "eta_r r = P R1 sinh", tol, balance(x.eta_r * x.r, -p.P * R1 * sh))
    col.add("sep.V-second", "eta_r^2 / H^2 = -V_rr / V", tol, balance(x.eta_r**2 / H2, x.V_rr / x.V))
    col.add("sep.theta-U-pair", "theta_f f = R2 sin / Chat and U_f f / U = T sin^2", tol,
            max(balance(x.theta_f * x.f, -R2 * s / p.Chat), balance(x.U_f * x.f / x.U, -p.T * s**2)))
    col.add("sep.U-ff", "U_ff = theta_f^2 T Chat U", tol,
            balance(x.U_ff, -x.theta_f**2 * p.T * p.Chat * x.U))


def _closed_form_theta_laws(col: _Collector, theta: float, p: Params):
    jt = Jet2(theta, np.ones(1), np.zeros((1, 1)))
    lhs = (cf.d.log(cf.ifun(jt, p)) - cf.d.log(cf.y2(jt, p))).grad[0]
    col.add("sep.I-Y2-log", "(ln(I / Y2))_theta = sqrt(L9) / sin", TOL_ANALYTIC,
            balance(lhs, -math.sqrt(float(cf.l9(theta, p))) / math.sin(theta)))


def _log_rate_fd(g, x: float, h: float) -> float:
    """Fourth-order central difference of ln g built from log-ratios."""
    l1 = math.log(float(g(x + h)) / float(g(x - h)))
    l2 = math.log(float(g(x + 2 * h)) / float(g(x - 2 * h)))
    return (8 * l1 - l2) / (12 * h)


def verify_ode_laws(plan: SamplingPlan, p: Params, model=None) -> list[IdentityRecord]:
    """The four logarithmic derivative laws against finite differences (absolute residual)."""
    model = model or ClassTwo(p)
    col = _Collector()
    for eta in plan.ode_eta_grid():
        h = 3e-4 * min(eta, 1.0)
        col.add("ode.V-law", "V_eta / V = -sinh / (H^2 R1)", TOL_ODE,
                abs(_log_rate_fd(model.V, eta, h) - float(cf.log_v_rate(eta, p))))
        col.add("ode.r-law", "r_eta / r = 1 / (P sinh R1)", TOL_ODE,
                abs(_log_rate_fd(model.r, eta, h) - float(cf.log_r_rate(eta, p))))
    for theta in plan.ode_theta_grid(p):
        h = 3e-4 * min(theta, p.theta_c - theta, 1.0)
        col.add("ode.U-law", "U_theta / U = sin / (P R2)", TOL_ODE,
                abs(_log_rate_fd(model.U, theta, h) - float(cf.log_u_rate(theta, p))))
        col.add("ode.f-law", "f_theta / f = Chat / (sin R2)", TOL_ODE,
                abs(_log_rate_fd(model.f, theta, h) - float(cf.log_f_rate(theta, p))))
    return col.records()


def _point_groups(plan: SamplingPlan, frame: Frame, p: Params, model, groups) -> list[IdentityRecord]:
    col = _Collector()
    for a in plan.angle_points(p):
        d = point_data(a, model, frame)
        x = chain_data(a, model) if ("struct" in groups or "sep" in groups) else None
        if "skew" in groups:
            _skew(col, d, p.H**2)
        if "sym" in groups:
            _symmetrizing(col, d, p.H**2)
        if "curv" in groups:
            _curvature_scalars(col, d, p)
        if "struct" in groups:
            _structural(col, d, x, p)
        if "sep" in groups:
            _separation(col, d, x, p)
    if "sep" in groups:
        for theta in plan.theta_grid(p):
            _closed_form_theta_laws(col, float(theta), p)
    return col.records()


def verify_skew_lists(plan: SamplingPlan, p: Params, frame: Frame | None = None, model=None):
    return _point_groups(plan, frame or default_frame(), p, model or ClassTwo(p), {"skew", "sym"})


def verify_structural_groups(plan: SamplingPlan, p: Params, frame: Frame | None = None, model=None):
    return _point_groups(plan, frame or default_frame(), p, model or ClassTwo(p), {"struct"})


def verify_separation_lines(plan: SamplingPlan, p: Params, frame: Frame | None = None, model=None):
    return _point_groups(plan, frame or default_frame(), p, model or ClassTwo(p), {"sep"})


def verify_tensor_suite(plan: SamplingPlan, frame: Frame, p: Params, model=None) -> list[IdentityRecord]:
    """Metric, frame, Cartan and tangent-space curvature identities at the tensor subset.

    Every tensor identity is covariant, so it is compared on the framed
    components, where g is close to diag(1, -1, -1, -1).
    """
    model = model or ClassTwo(p)
    col = _Collector()
    Ts = 1.0 - p.H**2
    for a in plan.tensor_points(p):
        y = np.asarray(tangent_from_angles(a, 1.0, frame, model), dtype=float)
        b = bundle_at(y, frame, model)
        fb = b.framed
        col.add("metric.angle-form", "g = l l - F^2 (eta eta + sinh^2 (theta theta + sin^2 phi phi)) / H^2",
                TOL_ANALYTIC, rel_norm(fb.g - angle_form_metric(fb), fb.g))
        col.add("metric.frame-form", "g = l l - u u - m m - p p", TOL_ANALYTIC,
                rel_norm(fb.g - frame_form_metric(fb), fb.g))
        eig = np.linalg.eigvalsh(b.g)
        col.add("metric.signature", "g has one positive and three negative eigenvalues", 0.5,
                0.0 if (np.sum(eig > 0) == 1 and np.sum(eig < 0) == 3) else 1.0)
        ind = indicatrix_induced_metric(a, frame, model)
        col.add("metric.indicatrix", "induced metric of F = 1 is diag(1, sinh^2, sinh^2 sin^2) / H^2",
                TOL_FD1, indicatrix_residual(ind, expected_indicatrix_metric(a, p.H)))
        pc = projected_coefficients(b)
        m = _measured_coeffset(pc, b.angles, p.H**2)
        closed = coefficients_at(b.angles, p)
        pe = particular_expansions(fb, closed)
        col.add("expand.particular", "angle Hessians equal the reduced expansions with closed-form coefficients",
                TOL_FD1, max(rel_norm(pe[k] - fb.angle_hess[k], fb.angle_hess[k]) for k in range(3)))
        ce = cartan_expansion(fb.angles, fb, m, p)
        col.add("cartan.expansion", "C_ijn equals its frame expansion", TOL_FD1, rel_norm(ce - fb.C, fb.C))
        col.add("cartan.annihilates-y", "C_ijn y^n = 0", TOL_FD1,
                rel_norm(np.einsum("ijn,n->ij", fb.C, fb.y), np.linalg.norm(fb.C) * np.linalg.norm(fb.y)))
        target = constant_curvature_model(fb, Ts)
        col.add("curv.tangent-space-tensor", "F^2 Rhat_jpqn = (1 - H^2)(h_pq h_jn - h_pn h_jq)", TOL_FD2,
                rel_norm(fb.Rhat - target, target))
        col.add("curv.frame-expansion", "Rhat equals its term-by-term frame expansion", TOL_FD2,
                rel_norm(curvature_frame_expansion(fb.angles, fb, closed) - fb.Rhat, fb.Rhat))
    return col.records()


def verify_horizontal(plan: SamplingPlan, p: Params, model=None) -> list[IdentityRecord]:
    model = model or ClassTwo(p)
    col = _Collector()
    for v in plan.horizontal_points(p, model):
        hb = horizontal_bundle(v, model)
        col.add("horiz.curvature-tensor", "r^2 R*_bace = (P - 1)(h_bc h_ae - h_be h_ac)", TOL_FD2,
                horizontal_curvature_check(hb, model))
        col.add("horiz.angle-form", "h_ab = (theta_a theta_b + sin^2 phi_a phi_b) r^2 / P", TOL_FD1,
                angle_form_check(hb, model))
        col.add("horiz.determinant", "det R_ab = I^6 (C11/C17)^4 C39^6 / (P^2 Chat^3 Y2^4)", TOL_FD1,
                determinant_check(hb, None, model))
        eig = np.linalg.eigvalsh(hb.R)
        col.add("horiz.positive-definite", "R_ab is positive definite", 0.5, 0.0 if eig.min() > 0 else 1.0)
        w3, wp = float(v[2]), math.hypot(float(v[0]), float(v[1]))
        r3, rp = axial_partials(w3, wp, model)
        c3, cp = axial_partials_closed_form(w3, wp, p)
        col.add("horiz.axial-partials", "r_w3 and r_wperp match their closed forms", TOL_ANALYTIC * 1e3,
                max(balance(r3, -c3), balance(rp, -cp)))
        col.add("horiz.euler", "w3 r_w3 + w_perp r_wperp = r and r_a v^a = r", TOL_ANALYTIC * 1e3,
                max(balance(w3 * r3, wp * rp, -hb.r), balance(*(hb.r_a * v), -hb.r)))
        col.add("horiz.f-identities", "f_a f_b + f f_ab and f_a v^a from the axial form of f", TOL_ANALYTIC * 1e3,
                _f_identities(hb, p))
    lam_records = _section_curvature(plan, p, model, col)
    return col.records() + lam_records


def _f_identities(hb, p: Params) -> float:
    v1, v2, v3 = hb.v
    C2 = p.C11**2
    f, fa, fab = hb.f, hb.f_a, hb.f_ab
    M = np.outer(fa, fa) + f * fab
    expected = np.array([
        [C2 / v3**2, 0.0, -2 * v1 * C2 / v3**3],
        [0.0, C2 / v3**2, -2 * v2 * C2 / v3**3],
        [-2 * v1 * C2 / v3**3, -2 * v2 * C2 / v3**3, 3 * (v1**2 + v2**2) * C2 / v3**4],
    ])
    res = float(np.max(np.abs(M - expected)) / np.max(np.abs(expected)))
    return max(res, vanish(fa @ hb.v, *(fa * hb.v)))


def _section_curvature(plan: SamplingPlan, p: Params, model, col: _Collector) -> list:
    if not plan.lambdas:
        return []
    lo, _ = lambda_range(model)
    scale = 1.0
    while min(plan.lambdas) * scale <= lo * 1.01:
        scale *= 2.0
    note = "" if scale == 1.0 else f"C1 scaled by {scale:g} so that every lambda is admissible"
    if scale != 1.0:
        q = p.replace(C1=p.C1 * scale)
        sec_model = _rescaled(model, q)
    else:
        sec_model = model
    thetas = plan.theta_grid(p)
    probe = [float(t) for t in thetas[1:-1:max(1, (thetas.size - 2) // 3)]] if thetas.size > 2 else []
    for lam in plan.lambdas:
        for th in probe or [0.5 * p.theta_c]:
            try:
                K, expected = section_curvature(lam, sec_model, theta=th, phi=p.Cstar)
                res = abs(K - expected) / expected
            except (FinsleroidError, ArithmeticError) as exc:
                # a model whose V is not monotone may have no section at this height
                res, note = math.inf, f"lambda = {lam:g}: {exc}"
            col.add("horiz.section-curvature", "Gaussian curvature of the section indicatrix = P / R_lambda^2",
                    TOL_FD2, res, note=note)
    return []


def _rescaled(model, q: Params):
    if isinstance(model, Perturbed):
        return Perturbed(q, model.which, model.factor)
    return ClassTwo(q)


# --- report ------------------------------------------------------------------------

@dataclass
class Report:
    records: list[IdentityRecord]
    params: dict
    plan: dict
    margins: dict
    model: str = "exact"
    elapsed: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def no_data(self) -> bool:
        return not self.records

    @property
    def overall(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def status(self) -> str:
        if self.no_data:
            return "no data"
        return "pass" if self.overall else "fail"

    def failed(self) -> list[IdentityRecord]:
        return [r for r in self.records if not r.passed]

    def get(self, rid: str) -> IdentityRecord:
        for r in self.records:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def to_dict(self, timing: bool = False) -> dict:
        """Plain-data form; wall time is left out unless asked for so the output is reproducible."""
        out = {
            "status": self.status,
            "overall_pass": self.overall,
            "model": self.model,
            "params": self.params,
            "plan": self.plan,
            "margins": self.margins,
            "records": [
                {"identity_id": r.id, "statement": r.statement, "max_residual": r.max_residual,
                 "tolerance": r.tolerance, "points": r.points, "status": r.status, "note": r.note}
                for r in self.records
            ],
            "extras": self.extras,
        }
        if timing:
            out["elapsed_seconds"] = self.elapsed
        return out

    def to_json(self, timing: bool = False, **kw) -> str:
        return json.dumps(self.to_dict(timing), indent=2, default=_json_default, **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        recs = [IdentityRecord(r["identity_id"], r["statement"], r["max_residual"], r["tolerance"],
                               r["points"], r["status"], r.get("note", "")) for r in data["records"]]
        return cls(recs, data["params"], data["plan"], data["margins"], data.get("model", "exact"),
                   data.get("elapsed_seconds", 0.0), data.get("extras", {}))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def full_report(plan: SamplingPlan | None = None, frame: Frame | None = None, p: Params | None = None,
                model=None) -> Report:
    """Run every identity group and collect the records."""
    plan = plan or SamplingPlan()
    frame = frame or default_frame()
    model = as_model(p) if model is None else model
    p = model.p
    start = time.perf_counter()
    records: list[IdentityRecord] = []
    if not plan.is_empty():
        records += _point_groups(plan, frame, p, model, {"skew", "sym", "curv", "struct", "sep"})
        records += verify_tensor_suite(plan, frame, p, model)
        records += verify_horizontal(plan, p, model)
        records += verify_ode_laws(plan, p, model)
    report = Report(records, p.to_dict(), plan.to_dict(), plan.margins(), getattr(model, "name", "exact"))
    report.elapsed = time.perf_counter() - start
    return report


def negative_controls(p: Params | None = None, eps: float = 0.01) -> dict:
    """The two standard perturbations: J by (1 + eps sinh eta), U by (1 + eps sin theta)."""
    p = p or default_params()
    return {"J": Perturbed(p, "J", eps=eps), "U": Perturbed(p, "U", eps=eps)}


def verify_curvature_suite(plan: SamplingPlan, frame: Frame, p: Params, model=None) -> list[IdentityRecord]:
    model = model or ClassTwo(p)
    scalars = _point_groups(plan, frame, p, model, {"curv"})
    return scalars + verify_tensor_suite(plan, frame, p, model) + verify_horizontal(plan, p, model)


# --- regularity probe -----------------------------------------------------------------

def fourth_difference(g, x: float, h: float) -> float:
    return (float(g(x - 2 * h)) - 4 * float(g(x - h)) + 6 * float(g(x))
            - 4 * float(g(x + h)) + float(g(x + 2 * h))) / h**4


def regularity_probe(p: Params, eta_min: float = 1e-3, eta_max: float = 10.0, n: int = 200) -> dict:
    """Fourth differences of V and r over [eta_min, eta_max], plus the Class I contrast.

    The Class I contrast uses the same H with P replaced by 1/P (< 1), where
    L = 1 - 1/P + (1 - 1/H^2) sinh^2 has a real zero eta0.
    """
    etas = np.geomspace(eta_min, eta_max, n)
    d4v, d4r = [], []
    for e in etas:
        h = min(0.2 * e, 1e-2)
        d4v.append(fourth_difference(lambda x: cf.vcheck(x, p), e, h))
        d4r.append(fourth_difference(lambda x: cf.rcheck(x, p), e, h))
    d4v, d4r = np.array(d4v), np.array(d4r)
    # r ~ eta^(1 - S1) near 0, so the raw fourth difference grows like eta^-4 there;
    # min(eta, 1)^4 D4 / value stays O(1) for a function that is smooth on the open interval
    w = np.minimum(etas, 1.0) ** 4
    vv = np.array([float(cf.vcheck(e, p)) for e in etas])
    rv = np.array([float(cf.rcheck(e, p)) for e in etas])
    scaled_v = np.max(np.abs(w * d4v / vv))
    scaled_r = np.max(np.abs(w * d4r / rv))
    P1 = 1.0 / p.P
    eta0 = cf.class_one_lhat_zero(p.H, P1)
    sign_change = None
    if eta0 is not None:
        lo = float(cf.class_one_lhat(eta0 * (1 - 1e-3), p.H, P1))
        hi = float(cf.class_one_lhat(eta0 * (1 + 1e-3), p.H, P1))
        sign_change = bool(lo < 0.0 < hi)
    return {
        "eta_range": [eta_min, eta_max],
        "points": n,
        "max_abs_d4_V": float(np.max(np.abs(d4v))),
        "max_abs_d4_r": float(np.max(np.abs(d4r))),
        "max_scaled_d4_V": float(scaled_v),
        "max_scaled_d4_r": float(scaled_r),
        "bounded": bool(np.all(np.isfinite(d4v)) and np.all(np.isfinite(d4r))),
        "class_one_P": P1,
        "class_one_eta0": eta0,
        "class_one_sign_change": sign_change,
        "class_two_lhat_min": float(np.min(cf.lhat(etas, p))),
    }
