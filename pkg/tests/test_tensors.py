import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_triples
from finsleroid.core import default_frame
from finsleroid.inversion import AngleTriple, metric_function, tangent_from_angles
from finsleroid.tensors import (NULLIFIED, adapted_step, angle_form_metric, angle_jets, bundle_at, cartan_tensor, coefficients_at,
                                constant_curvature_model, expected_indicatrix_metric, frame_form_metric,
                                indicatrix_induced_metric, metric_tensor, projected_coefficients)

POINTS = [AngleTriple(0.7, 1.0, 0.4), AngleTriple(0.05, 0.3, -1.5), AngleTriple(2.5, 2.2, 2.0)]


def fd_half_hessian_F2(y, p, h):
    """(1/2) d^2 F^2 by central second differences of F alone."""
    y = np.asarray(y, dtype=float)
    n = y.size
    F2 = lambda z: metric_function(z, None, p) ** 2  # noqa: E731
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h
            out[i, j] = (F2(y + ei + ej) - F2(y + ei - ej) - F2(y - ei + ej) + F2(y - ei - ej)) / (4 * h * h)
    return 0.5 * out


def point(a, p):
    return np.asarray(tangent_from_angles(a, 1.0, default_frame(), p), dtype=float)


class TestMetric:
    def test_against_fd_of_F(self, pset):
        y = point(AngleTriple(0.6, 1.1, 0.5), pset)
        g = metric_tensor(y, None, pset)
        # Richardson: the second difference is O(h^2)
        fd = (4 * fd_half_hessian_F2(y, pset, 5e-4) - fd_half_hessian_F2(y, pset, 1e-3)) / 3
        assert_allclose(g, fd, atol=1e-6 * np.abs(g).max())

    @pytest.mark.parametrize("a", POINTS)
    def test_homogeneity_identities(self, pset, a):
        y = point(a, pset)
        b = bundle_at(y, None, pset, cartan=False)
        assert_allclose(y @ b.g @ y, b.F**2, rtol=1e-10)
        assert_allclose(b.g @ y, b.F * b.l, rtol=1e-9, atol=1e-12 * np.abs(b.g).max())
        assert_allclose(b.l @ y, b.F, rtol=1e-12)

    @pytest.mark.parametrize("a", POINTS)
    def test_framed_metric_is_diagonal(self, pset, a):
        b = bundle_at(point(a, pset), None, pset, cartan=False)
        assert_allclose(b.framed.g, np.diag([1.0, -1.0, -1.0, -1.0]), atol=1e-9)

    @pytest.mark.parametrize("a", POINTS)
    def test_angle_and_frame_forms(self, pset, a):
        fb = bundle_at(point(a, pset), None, pset, cartan=False).framed
        assert_allclose(angle_form_metric(fb), fb.g, atol=1e-9)
        assert_allclose(frame_form_metric(fb), fb.g, atol=1e-9)

    def test_gradient_against_fd_fixed_step(self, pset):
        # central differences with step 1e-6 over the whole sampled eta range; near the
        # cone F = 0 no fixed step reaches 1e-7 (truncation above, kappa eps / h below)
        worst, at = 0.0, None
        for a in random_triples(pset, 100, seed=9):
            y = point(a, pset)
            jets = angle_jets(y, None, pset)
            h = 1e-6
            fd = np.array([(metric_function(y + h * e, None, pset) - metric_function(y - h * e, None, pset)) / (2 * h)
                           for e in np.eye(4)])
            err = np.linalg.norm(jets.dF - fd) / np.linalg.norm(jets.dF)
            if err > worst:
                worst, at = err, a
        assert worst < 1e-7, f"worst {worst:.2e} at {at}"

    def test_gradient_against_framed_fd(self, pset):
        # F itself carries kappa eps of rounding near the cone, so the steps are the adapted
        # per-direction ones (tripled) along the dual frame and the difference is fourth order
        worst = 0.0
        for a in random_triples(pset, 100, seed=9):
            b = bundle_at(point(a, pset), None, pset, cartan=False)
            A, hs = b.dual_frame, 3.0 * adapted_step(b.F, b.angles, pset.theta_c)
            Fy = lambda t, k: metric_function(b.y + t * A[:, k], None, pset)  # noqa: E731
            fd = np.array([(8 * (Fy(h, k) - Fy(-h, k)) - (Fy(2 * h, k) - Fy(-2 * h, k))) / (12 * h)
                           for k, h in enumerate(hs)])
            exact = b.l @ A
            worst = max(worst, np.linalg.norm(fd - exact) / np.linalg.norm(exact))
        assert worst < 1e-7

    def test_signature(self, pset):
        eig = np.linalg.eigvalsh(metric_tensor(point(POINTS[0], pset), None, pset))
        assert (eig > 0).sum() == 1 and (eig < 0).sum() == 3


class TestCartan:
    def test_symmetric_and_annihilates_y(self, pset):
        b = bundle_at(point(POINTS[0], pset), None, pset)
        C = b.framed.C
        for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
            assert_allclose(C.transpose(perm), C, atol=1e-8)
        assert np.abs(np.einsum("ijn,n->ij", C, b.framed.y)).max() < 1e-6 * np.abs(C).max()

    def test_framed_matches_cartesian_fd(self, p):
        y = point(AngleTriple(0.5, 1.2, 0.3), p)
        b = bundle_at(y, None, p)
        plain = cartan_tensor(y, None, p)
        assert_allclose(b.C, plain, atol=1e-5 * np.abs(plain).max())


class TestCurvature:
    @pytest.mark.parametrize("a", POINTS)
    def test_constant(self, pset, a):
        fb = bundle_at(point(a, pset), None, pset).framed
        target = constant_curvature_model(fb, 1.0 - pset.H**2)
        assert np.linalg.norm(fb.Rhat - target) < 1e-4 * np.linalg.norm(target)


class TestCoefficients:
    def test_nullified_vanish(self, pset):
        b = bundle_at(point(POINTS[0], pset), None, pset, cartan=False)
        pc = projected_coefficients(b)
        scale = max(abs(v) for v in pc.values())
        for k in NULLIFIED:
            assert abs(pc[k]) < 1e-9 * scale, k

    def test_measured_match_closed_form(self, pset):
        a = POINTS[0]
        b = bundle_at(point(a, pset), None, pset, cartan=False)
        pc = projected_coefficients(b)
        c = coefficients_at(b.angles, pset)
        for k in ("u2", "u3", "u6", "z2", "z3", "z4", "r1", "r5"):
            assert_allclose(pc[k], getattr(c, k), rtol=1e-8, err_msg=k)
        assert abs(pc["r2"]) < 1e-9


class TestIndicatrix:
    @pytest.mark.parametrize("a", POINTS)
    def test_induced_metric(self, pset, a):
        got = indicatrix_induced_metric(a, None, pset)
        want = expected_indicatrix_metric(a, pset.H)
        scale = np.sqrt(np.outer(np.diag(want), np.diag(want)))
        assert np.abs(got - want).max() < 1e-9 * scale.max()
        assert np.all(np.abs(got - want) / scale < 1e-8)

    def test_fd_tangents_agree(self, p):
        a = POINTS[0]
        assert_allclose(indicatrix_induced_metric(a, None, p, method="fd"),
                        indicatrix_induced_metric(a, None, p), atol=1e-7)

    def test_expected_values(self):
        m = expected_indicatrix_metric(AngleTriple(math.asinh(1.0), math.pi / 2, 0.0), 2.0)
        assert_allclose(m, np.eye(3) / 4)
