"""Metric, Cartan and curvature tensors of the tangent space at one vector.

First and second derivatives of F, eta, theta, phi with respect to y come
exactly from one jet evaluation of the angle pipeline. The Cartan tensor is a
central difference of the exact metric tensor, taken along the frame-adapted
basis. The closed-form expansion coefficients live in :func:`coefficients_at`;
:func:`projected_coefficients` measures the same numbers from the angle
Hessians by contracting with the dual frame, so the two can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import charfun as cf
from .core import DomainError, Frame, default_frame
from .deriv import Jet2, default_step, third_derivative
from .inversion import AngleTriple, as_model, indicatrix_point, tangent_pipeline


@dataclass(frozen=True)
class AngleJets:
    """Values, gradients and Hessians of F and the three angles at y."""

    y: np.ndarray
    F: float
    dF: np.ndarray
    d2F: np.ndarray
    eta: float
    theta: float
    phi: float
    grad: np.ndarray   # rows: eta_i, theta_i, phi_i
    hess: np.ndarray   # [k] = Hessian of angle k

    @property
    def angles(self) -> AngleTriple:
        return AngleTriple(self.eta, self.theta, self.phi)


def angle_jets(y, frame: Frame | None = None, p=None, basis: np.ndarray | None = None) -> AngleJets:
    """Jets of F and the angles at ``y``.

    With ``basis`` the derivatives are taken along its columns, i.e. with
    respect to x in y + basis @ x at x = 0. Seeding the jets this way avoids
    the cancellation of projecting a Cartesian Hessian afterwards.
    """
    frame = frame or default_frame()
    model = as_model(p)
    y = np.asarray(y, dtype=float)
    if basis is None:
        seeds = Jet2.variables(y)
    else:
        B = np.asarray(basis, dtype=float)
        n = B.shape[1]
        seeds = [Jet2(float(y[i]), B[i].copy(), np.zeros((n, n))) for i in range(y.size)]
    out = tangent_pipeline(seeds, frame, model)
    F, eta, theta, phi = out["F"], out["eta"], out["theta"], out["phi"]
    return AngleJets(
        y=y, F=F.value, dF=F.grad, d2F=F.hess,
        eta=eta.value, theta=theta.value, phi=phi.value,
        grad=np.stack([eta.grad, theta.grad, phi.grad]),
        hess=np.stack([eta.hess, theta.hess, phi.hess]),
    )


def metric_tensor(y, frame: Frame | None = None, p=None, basis: np.ndarray | None = None) -> np.ndarray:
    """g_ij = (1/2) d^2 F^2 / dy^i dy^j, exact up to roundoff (on ``basis`` if given)."""
    j = angle_jets(y, frame, p, basis)
    return j.F * j.d2F + np.outer(j.dF, j.dF)


def cartan_tensor(y, frame: Frame | None = None, p=None, step: float | None = None) -> np.ndarray:
    """C_ijn = (1/2) dg_ij/dy^n by central differences of the exact g."""
    return 0.5 * third_derivative(lambda yy: metric_tensor(yy, frame, p), y, step)


def _sym_all(T: np.ndarray) -> np.ndarray:
    perms = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
    return sum(T.transpose(q) for q in perms) / 6.0


def cartan_in_basis(y, basis: np.ndarray, frame: Frame | None = None, p=None,
                    step=None) -> np.ndarray:
    """C(A_a, A_b, A_c) on the columns A_a of ``basis``.

    Central differences along the basis vectors of the metric components on
    the same basis; ``step`` is a scalar or one step per basis vector. With
    the dual of (l, u, m, p) those components are close
    to diag(1, -1, -1, -1), so this stays accurate where the Cartesian
    components of g are badly conditioned.
    """
    A = np.asarray(basis, dtype=float)
    y = np.asarray(y, dtype=float)

    n = A.shape[1]
    if step is None:
        step = default_step(y)
    steps = np.broadcast_to(np.asarray(step, dtype=float), (n,))

    def g_basis(c, t):
        return metric_tensor(y + t * A[:, c], frame, p, basis=A)

    D = np.empty((n, n, n))
    for c in range(n):
        h = steps[c]
        # fourth-order central difference
        D[:, :, c] = (8.0 * (g_basis(c, h) - g_basis(c, -h))
                      - (g_basis(c, 2 * h) - g_basis(c, -2 * h))) / (12.0 * h)
    return _sym_all(0.5 * D)


# relative step per direction (l, u, m, p)
ADAPTED_REL = (3e-4, 3e-4, 1e-3, 3e-4)


def adapted_step(F: float, a: AngleTriple, theta_c: float, rel=ADAPTED_REL) -> np.ndarray:
    """Difference steps along the dual frame (l, u, m, p) for the Cartan tensor.

    A unit step along u, m, p moves eta, theta, phi by H/F, H/(F sinh),
    H/(F sinh sin); each step is ``rel`` (scalar or per direction) times the
    length over which the corresponding angle stays inside its natural range.
    """
    sh, s = min(math.sinh(a.eta), 1.0), math.sin(a.theta)
    # beyond F the straight step bends eta at second order, so all lengths are capped there
    # the m step keeps theta a safe fraction of the way from theta_c
    lengths = np.array([1.0, sh, sh * min(s, 10.0 * (theta_c - a.theta), 1.0), sh * min(s, 1.0)])
    return np.asarray(rel, dtype=float) * F * lengths


def to_basis(T: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Components of a covariant tensor on the columns of ``basis``."""
    for _ in range(T.ndim):
        T = np.tensordot(T, basis, axes=([0], [0]))
    return T


def from_basis(T: np.ndarray, cobasis: np.ndarray) -> np.ndarray:
    """Cartesian components from components on the basis dual to the rows of ``cobasis``."""
    return to_basis(T, cobasis)


def curvature_from_cartan(C: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """R_jpqn = C^h_pq C_hjn - C^h_pn C_hjq."""
    Cup = np.einsum("hk,kpq->hpq", ginv, C)
    first = np.einsum("hpq,hjn->jpqn", Cup, C)
    return first - first.transpose(0, 1, 3, 2)


@dataclass(frozen=True)
class TensorBundle:
    """Tensors at one tangent vector, in the components of some basis.

    :func:`bundle_at` returns Cartesian components; ``framed`` holds the same
    bundle on the basis dual to (l, u, m, p), where all components are O(1)
    and comparisons are well conditioned.
    """

    y: np.ndarray
    angles: AngleTriple
    F: float
    l: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    h: np.ndarray
    u: np.ndarray
    m: np.ndarray
    p: np.ndarray
    angle_grad: np.ndarray
    angle_hess: np.ndarray
    H: float
    C: np.ndarray | None = None
    Rhat: np.ndarray | None = None
    framed: "TensorBundle | None" = None

    @property
    def frame_vectors(self) -> np.ndarray:
        """Rows l_i, u_i, m_i, p_i."""
        return np.stack([self.l, self.u, self.m, self.p])

    @property
    def dual_frame(self) -> np.ndarray:
        """Columns dual to the rows of :attr:`frame_vectors`."""
        return np.linalg.inv(self.frame_vectors)

    def raised(self, v: np.ndarray) -> np.ndarray:
        return self.ginv @ v


def _assemble(jets: AngleJets, y, H: float, C=None, Rhat=None, framed=None) -> TensorBundle:
    F, l = jets.F, jets.dF
    g = F * jets.d2F + np.outer(l, l)
    sh = math.sinh(jets.eta)
    st = math.sin(jets.theta)
    return TensorBundle(
        y=np.asarray(y, dtype=float), angles=jets.angles, F=F, l=l, g=g, ginv=np.linalg.inv(g),
        h=g - np.outer(l, l), u=F * jets.grad[0] / H, m=F * sh * jets.grad[1] / H,
        p=F * sh * st * jets.grad[2] / H, angle_grad=jets.grad, angle_hess=jets.hess, H=H,
        C=C, Rhat=Rhat, framed=framed,
    )


def bundle_at(y, frame: Frame | None = None, p=None, cartan: bool = True,
              step: float | None = None) -> TensorBundle:
    """All tangent-space tensors at ``y``.

    The jets are evaluated twice: on Cartesian seeds, which fixes the frame
    (l, u, m, p), and on seeds along the dual frame, which gives the framed
    components. With ``cartan=False`` the finite-difference layer is skipped
    and C, Rhat are left as None.
    """
    frame = frame or default_frame()
    model = as_model(p)
    H = model.p.H
    y = np.asarray(y, dtype=float)
    cart = _assemble(angle_jets(y, frame, model), y, H)
    E = cart.frame_vectors
    A = np.linalg.inv(E)
    fj = angle_jets(y, frame, model, basis=A)
    C_f = R_f = None
    if cartan:
        if step is None:
            step = adapted_step(fj.F, fj.angles, model.theta_c)
        C_f = cartan_in_basis(y, A, frame, model, step)
        g_f = fj.F * fj.d2F + np.outer(fj.dF, fj.dF)
        R_f = curvature_from_cartan(C_f, np.linalg.inv(g_f))
    framed = _assemble(fj, E @ y, H, C_f, R_f)
    if not cartan:
        return replace(cart, framed=framed)
    return replace(cart, C=from_basis(C_f, E), Rhat=from_basis(R_f, E), framed=framed)


def angle_form_metric(b: TensorBundle) -> np.ndarray:
    """g_ij rebuilt from l_i and the angle gradients."""
    eta, theta = b.angles.eta, b.angles.theta
    e, t, f = b.angle_grad
    sh2 = math.sinh(eta) ** 2
    quad = np.outer(e, e) + sh2 * (np.outer(t, t) + math.sin(theta) ** 2 * np.outer(f, f))
    return np.outer(b.l, b.l) - b.F**2 / b.H**2 * quad


def frame_form_metric(b: TensorBundle) -> np.ndarray:
    """l l - u u - m m - p p."""
    return np.outer(b.l, b.l) - np.outer(b.u, b.u) - np.outer(b.m, b.m) - np.outer(b.p, b.p)


# --- coefficients ------------------------------------------------------------

@dataclass(frozen=True)
class CoeffSet:
    u2: float
    u3: float
    u6: float
    z2: float
    z3: float
    z4: float
    r1: float
    r2: float
    r5: float
    L2: float
    L3: float
    L: float
    z2check: float
    z3check: float
    L2check: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def eta_coefficients(eta, p):
    """(u2, L2, u6) as functions of eta; jet-aware."""
    H2 = p.H**2
    sh = cf.d.sinh(eta)
    u2 = H2 * cf.r1(eta, p) / sh
    L2 = H2 * cf.d.sqrt(cf.lhat(eta, p)) / sh
    u6 = L2 - H2 * (1.0 - H2) / L2
    return u2, L2, u6


def theta_coefficients(theta, p):
    """(z2check, L2check, z3check) as functions of theta; jet-aware."""
    H2 = p.H**2
    s, c = cf.d.sin(theta), cf.d.cos(theta)
    z2c = H2 * cf.r2(theta, p) / s
    L2c = z2c - H2 * c / s
    z3c = L2c - H2 * H2 * (1.0 - 1.0 / p.P) / L2c
    return z2c, L2c, z3c


def coefficients_at(a: AngleTriple, p) -> CoeffSet:
    """Closed-form expansion coefficients of the Class II solution."""
    pp = as_model(p).p
    eta, theta = a.eta, a.theta
    if not eta > 0.0:
        raise DomainError("coefficients need sinh(eta) > 0")
    if not 0.0 < theta < math.pi:
        raise DomainError("coefficients need sin(theta) > 0")
    H2 = pp.H**2
    sh, ch = math.sinh(eta), math.cosh(eta)
    s, c = math.sin(theta), math.cos(theta)
    u2, L2, u6 = (float(v) for v in eta_coefficients(eta, pp))
    z2c, L2c, z3c = (float(v) for v in theta_coefficients(theta, pp))
    z4 = (u2 * sh - 2.0 * H2 * ch) / sh**2
    r1 = (z2c * s - 2.0 * H2 * c) / (sh**2 * s**2)
    return CoeffSet(
        u2=u2, u3=u2, u6=u6,
        z2=z2c / sh**2, z3=z3c / sh**2, z4=z4,
        r1=r1, r2=0.0, r5=z4 / s,
        L2=L2, L3=L2, L=(r1 * sh**2 * s + H2 * c / s) / sh,
        z2check=z2c, z3check=z3c, L2check=L2c,
    )


def projected_coefficients(b: TensorBundle) -> dict:
    """All eighteen general-expansion coefficients measured from the angle Hessians.

    Each coefficient is F^2 X(A, B), where X is one of the angle Hessians and
    A, B are vectors of the basis dual to (l, u, m, p). For the exact metric
    that basis is g-orthonormal and this equals projection with g-raised frame
    vectors; reading the components off the framed jets avoids both g^-1 and
    the cancellation of a Cartesian projection.
    """
    fb = b.framed if b.framed is not None else b
    F2 = fb.F**2
    if fb is b:
        A = b.dual_frame
        he, ht, hp = (A.T @ X @ A for X in b.angle_hess)
    else:
        he, ht, hp = fb.angle_hess
    U, M, P = 1, 2, 3

    def q(X, i, j):
        return float(F2 * X[i, j])

    return dict(
        u1=q(he, P, U), u2=q(he, P, P), u3=q(he, M, M), u4=q(he, M, U), u5=q(he, P, M), u6=q(he, U, U),
        z1=q(ht, P, M), z2=q(ht, P, P), z3=q(ht, M, M), z4=q(ht, U, M), z5=q(ht, P, U), z6=q(ht, U, U),
        r1=q(hp, P, M), r2=q(hp, P, P), r3=q(hp, M, M), r4=q(hp, U, M), r5=q(hp, P, U), r6=q(hp, U, U),
    )


NULLIFIED = ("u1", "u4", "u5", "z1", "z5", "z6", "r3", "r4", "r6")


def particular_expansions(b: TensorBundle, c: CoeffSet) -> np.ndarray:
    """eta_ij, theta_ij, phi_ij rebuilt from the reduced expansions and ``c``."""
    H2 = b.H**2
    eta, theta = b.angles.eta, b.angles.theta
    sh, s = math.sinh(eta), math.sin(theta)
    e, t, f = b.angle_grad
    l, F = b.l, b.F

    def sym(a, bb):
        return np.outer(a, bb) + np.outer(bb, a)

    ff = np.outer(f, f)
    tt = np.outer(t, t)
    ee = np.outer(e, e)
    eta_ij = (-sym(l, e) / F + c.u2 / H2 * sh**2 * s**2 * ff + c.u3 / H2 * sh**2 * tt
              + c.u6 / H2 * ee)
    theta_ij = (-sym(l, t) / F + c.z2 / H2 * sh**2 * s**2 * ff + c.z3 / H2 * sh**2 * tt
                + c.z4 / H2 * sh * sym(e, t))
    phi_ij = (-sym(l, f) / F + c.r1 / H2 * sh**2 * s * sym(f, t) + c.r2 / H2 * sh**2 * s**2 * ff
              + c.r5 / H2 * sh * s * sym(f, e))
    return np.stack([eta_ij, theta_ij, phi_ij])


def _sym3(a, bb, cc):
    """a_i b_j b_n + a_n b_i b_j + a_j b_i b_n pattern: a on each slot once."""
    return (np.einsum("i,j,n->ijn", a, bb, cc) + np.einsum("i,j,n->ijn", cc, a, bb)
            + np.einsum("i,j,n->ijn", bb, cc, a))


def cartan_expansion(a: AngleTriple, b: TensorBundle, c: CoeffSet, p=None) -> np.ndarray:
    """C_ijn assembled from the frame and the expansion coefficients."""
    u, m, pv = b.u, b.m, b.p
    sh, s = math.sinh(a.eta), math.sin(a.theta)

    def cube(v):
        return np.einsum("i,j,n->ijn", v, v, v)

    fhc = (-c.u6 * cube(u)
           - c.L3 * _sym3(u, m, m)
           - c.L2 * _sym3(u, pv, pv)
           - sh * c.z3 * cube(m)
           - c.L * _sym3(m, pv, pv)
           - c.r2 * sh * s * cube(pv))
    return fhc / (b.F * b.H)


def curvature_hat(b: TensorBundle) -> np.ndarray:
    if b.C is None:
        raise ValueError("bundle was built without the Cartan tensor")
    return b.Rhat


def constant_curvature_model(b: TensorBundle, Tstar: float) -> np.ndarray:
    """Tstar (h_pq h_jn - h_pn h_jq) / F^2 in jpqn order."""
    h = b.h
    hh = np.einsum("pq,jn->jpqn", h, h)
    return Tstar * (hh - hh.transpose(0, 1, 3, 2)) / b.F**2


def curvature_frame_expansion(a: AngleTriple, b: TensorBundle, c: CoeffSet) -> np.ndarray:
    """The curvature contraction assembled term by term from the frame expansion.

    Independent of the finite-difference Cartan tensor: uses only the frame
    vectors and the closed-form coefficients (r2 = 0 assumed).
    """
    u, m, pv = b.u, b.m, b.p
    sh = math.sinh(a.eta)
    L, L2, L3, u6, z3 = c.L, c.L2, c.L3, c.u6, c.z3

    def o4(w, x, y, z):
        # slot order j, p, q, n
        return np.einsum("j,p,q,n->jpqn", w, x, y, z)

    A = u6 * np.outer(u, u) + L3 * np.outer(m, m) + L2 * np.outer(pv, pv)
    X = -np.einsum("pq,jn->jpqn", A, A)
    X -= L2**2 * (o4(u, pv, u, pv) + o4(pv, u, pv, u))
    X -= L * L2 * (o4(m, pv, u, pv) + o4(pv, u, pv, m) + o4(pv, m, pv, u) + o4(u, pv, m, pv))
    X -= L**2 * (o4(pv, m, pv, m) + o4(m, pv, m, pv))
    X -= L3**2 * (o4(u, m, u, m) + o4(m, u, m, u))
    X -= L * z3 * sh * (o4(pv, m, m, pv) + o4(m, pv, pv, m))
    X -= L * L3 * (o4(m, pv, pv, u) + o4(u, pv, pv, m) + o4(pv, m, u, pv) + o4(pv, u, m, pv))
    total = X - X.transpose(0, 1, 3, 2)
    return total / (b.H**2 * b.F**2)


# --- indicatrix ----------------------------------------------------------------

def indicatrix_tangents(a: AngleTriple, frame: Frame | None = None, p=None, method: str = "jet",
                        step: float = 1e-6) -> np.ndarray:
    """t^i_a = dl^i / d(angle a), shape (3, 4)."""
    frame = frame or default_frame()
    model = as_model(p)
    if method == "jet":
        seeds = Jet2.variables([a.eta, a.theta, a.phi])
        pts = indicatrix_point(seeds, frame, model)
        return np.stack([pt.grad for pt in pts], axis=1)
    if method == "fd":
        base = np.array(a.as_tuple())
        rows = []
        for k in range(3):
            dk = np.zeros(3)
            dk[k] = step
            plus = np.asarray(indicatrix_point(tuple(base + dk), frame, model), dtype=float)
            minus = np.asarray(indicatrix_point(tuple(base - dk), frame, model), dtype=float)
            rows.append((plus - minus) / (2.0 * step))
        return np.stack(rows)
    raise ValueError(f"unknown method {method!r}")


def indicatrix_induced_metric(a: AngleTriple, frame: Frame | None = None, p=None,
                              method: str = "jet") -> np.ndarray:
    """i_ab = -t^i_a t^j_b h_ij on the unit surface F = 1.

    The contraction runs on framed components: the Cartesian h loses about
    4 eta / ln 10 digits to conditioning, the framed one is diag(0, -1, -1, -1).
    """
    frame = frame or default_frame()
    model = as_model(p)
    y = np.asarray(indicatrix_point(a, frame, model), dtype=float)
    b = bundle_at(y, frame, model, cartan=False)
    tf = indicatrix_tangents(a, frame, model, method) @ b.frame_vectors.T
    return -tf @ b.framed.h @ tf.T


def expected_indicatrix_metric(a: AngleTriple, H: float) -> np.ndarray:
    sh2 = math.sinh(a.eta) ** 2
    return np.diag([1.0, sh2, sh2 * math.sin(a.theta) ** 2]) / H**2


def cartan_step(y) -> float:
    return default_step(y)
