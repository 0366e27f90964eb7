import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_triples
from finsleroid import charfun as cf
from finsleroid.core import ConvergenceError, DomainError, OnAxisSection, OutsideBLikeRegion, default_frame
from finsleroid.deriv import Jet2
from finsleroid.tensors import angle_jets
from finsleroid.inversion import (AngleTriple, angles_from_tangent, as_model, eta_from_r, eta_node,
                                  indicatrix_point, metric_function, solve_increasing,
                                  tangent_from_angles, theta_from_f, theta_node)


EPS = np.finfo(float).eps


def condition_number(y, p):
    """sum |y_i dF/dy^i| / F: relative change of F per unit relative rounding of y."""
    j = angle_jets(y, None, p)
    return float(np.sum(np.abs(np.asarray(y) * j.dF)) / j.F)


class TestSolver:
    def test_inverts_cubic(self):
        # g(x) = x^3 = 8 -> x = 2
        root = solve_increasing(lambda x: (x**3, 3 * x**2), 8.0, 0.0, -5.0, 5.0)
        assert_allclose(root, 2.0, rtol=1e-14)

    def test_out_of_bracket(self):
        with pytest.raises((DomainError, ConvergenceError)):
            solve_increasing(lambda s: (math.exp(s), math.exp(s)), 1e9, 0.0, -1.0, 1.0)


class TestScalarInversion:
    @pytest.mark.parametrize("eta", [1e-3, 0.05, 0.9, 4.0, 9.0])
    def test_eta(self, pset, eta):
        # r flattens towards r_sup, so a one-ulp change of r moves eta by eps / (r_eta / r)
        cond = 1.0 / float(cf.log_r_rate(eta, pset))
        got = eta_from_r(float(cf.rcheck(eta, pset)), pset)
        assert abs(got - eta) < 1e-12 * eta + 16 * np.finfo(float).eps * cond

    @pytest.mark.parametrize("frac", [0.02, 0.4, 0.8, 0.97])
    def test_theta(self, pset, frac):
        th = frac * pset.theta_c
        assert_allclose(theta_from_f(float(cf.fcheck(th, pset)), pset), th, rtol=1e-11)

    def test_r_beyond_cone(self, p):
        with pytest.raises(DomainError):
            eta_from_r(cf.r_sup(p) * 1.01, p)

    def test_inverse_jets(self, p):
        # d theta / d f = 1 / f'(theta); second derivative -f'' / f'^3
        model = as_model(p)
        th = 1.1
        f, f1, f2 = cf.derivs_by_jet(lambda x: cf.fcheck(x, p), th)
        j = theta_node(Jet2(f, np.ones(1), np.zeros((1, 1))), model)
        assert_allclose(j.value, th, rtol=1e-12)
        assert_allclose(j.grad[0], 1 / f1, rtol=1e-10)
        assert_allclose(j.hess[0, 0], -f2 / f1**3, rtol=1e-8)
        eta = 0.6
        r, r1, r2 = cf.derivs_by_jet(lambda x: cf.rcheck(x, p), eta)
        j = eta_node(Jet2(r, np.ones(1), np.zeros((1, 1))), model)
        assert_allclose(j.grad[0], 1 / r1, rtol=1e-10)
        assert_allclose(j.hess[0, 0], -r2 / r1**3, rtol=1e-8)


class TestRoundTrip:
    def test_angles_tangent_angles(self, pset):
        worst = 0.0
        for a in random_triples(pset, 300, seed=11):
            y = tangent_from_angles(a, 1.7, default_frame(), pset)
            back, F = angles_from_tangent(y, default_frame(), pset)
            worst = max(worst, abs(back.eta - a.eta), abs(back.theta - a.theta), abs(back.phi - a.phi))
            assert_allclose(F, 1.7 * float(cf.vcheck(a.eta, pset)), rtol=1e-10)
        assert worst < 1e-9

    @pytest.mark.parametrize("a", [AngleTriple(1.0, 1.0, 0.3), AngleTriple(0.02, 0.5, -1.0),
                                   AngleTriple(3.0, 2.0, 2.0)])
    def test_indicatrix_point_has_unit_F(self, pset, a):
        assert abs(metric_function(indicatrix_point(a, None, pset), None, pset) - 1.0) < 1e-12

    def test_unit_F_at_conditioning_floor(self, pset):
        # near the cone F = 0 the rounding of l itself moves F by kappa eps
        for a in random_triples(pset, 50, seed=5):
            y = np.asarray(indicatrix_point(a, None, pset), dtype=float)
            assert abs(metric_function(y, None, pset) - 1.0) <= 4 * condition_number(y, pset) * EPS


class TestSymmetries:
    y = np.array([2.0, 0.3, -0.2, 0.5])

    @pytest.mark.parametrize("s", [1e-3, 0.5, 2.0, 10.0, 1e3])
    def test_homogeneity(self, pset, s):
        F = metric_function(self.y, None, pset)
        assert abs(metric_function(s * self.y, None, pset) - s * F) < 1e-12 * s * F
        a, _ = angles_from_tangent(self.y, None, pset)
        b, _ = angles_from_tangent(s * self.y, None, pset)
        assert_allclose(b.as_tuple(), a.as_tuple(), rtol=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 1.2, 2.5, -2.0])
    def test_rotation_in_transverse_plane(self, pset, alpha):
        fr = default_frame()
        b, w1, w2, w3 = fr.covectors @ self.y
        c, s = math.cos(alpha), math.sin(alpha)
        rotated = fr.compose(b, (c * w1 - s * w2) / b, (s * w1 + c * w2) / b, w3 / b)
        F = metric_function(self.y, fr, pset)
        assert abs(metric_function(rotated, fr, pset) - F) < 1e-12 * F


class TestDomain:
    def test_negative_b(self, p):
        with pytest.raises(OutsideBLikeRegion):
            angles_from_tangent([-1.0, 0.1, 0.1, 0.1], None, p)

    def test_axis(self, p):
        with pytest.raises(OnAxisSection):
            angles_from_tangent([1.0, 0.0, 0.0, 0.3], None, p)

    def test_azimuth_chart(self, p):
        with pytest.raises(DomainError):
            tangent_from_angles(AngleTriple(1.0, 1.0, 4.0), 1.0, None, p)
