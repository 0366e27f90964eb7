"""Acceptance criteria, each on the default and the second parameter set.

Every test prints one PASS/FAIL line (visible with ``pytest -s`` or in the
summary of ``pytest -v -rA``) before asserting.
"""

import math
import time

import numpy as np
import pytest

from conftest import SECOND_SET, random_triples
from finsleroid.core import default_frame, default_params, validate_params
from finsleroid.inversion import AngleTriple, angles_from_tangent, metric_function, tangent_from_angles
from finsleroid.tensors import angle_form_metric, angle_jets, bundle_at, expected_indicatrix_metric, indicatrix_induced_metric
from finsleroid.verifier import (SamplingPlan, full_report, indicatrix_residual, negative_controls,
                                 regularity_probe, rel_norm, verify_horizontal, verify_ode_laws,
                                 verify_tensor_suite)

SETS = {"default": default_params(), "second": validate_params(**SECOND_SET)}


def announce(capsys, criterion: str, ok: bool, detail: str):
    with capsys.disabled():
        print(f"\n[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


@pytest.fixture(scope="module", params=list(SETS))
def pset(request):
    return request.param, SETS[request.param]


@pytest.fixture(scope="module")
def tensor_records():
    """100 continuously drawn tensor points per parameter set."""
    plan = SamplingPlan(continuous=True, n_tensor=100, seed=7)
    return {k: {r.id: r for r in verify_tensor_suite(plan, default_frame(), p)} for k, p in SETS.items()}


@pytest.fixture(scope="module")
def reports():
    out = {}
    for k, p in SETS.items():
        start = time.perf_counter()
        rep = full_report(SamplingPlan(), default_frame(), p)
        out[k] = (rep, time.perf_counter() - start)
    return out


class TestAcceptance:
    def test_01_metric_reconstruction(self, pset, capsys):
        name, p = pset
        worst, bad_sig = 0.0, 0
        for a in random_triples(p, 200, seed=21):
            y = np.asarray(tangent_from_angles(a, 1.0, default_frame(), p), dtype=float)
            b = bundle_at(y, default_frame(), p, cartan=False)
            worst = max(worst, rel_norm(b.g - angle_form_metric(b), b.g))
            eig = np.linalg.eigvalsh(b.g)
            bad_sig += not ((eig > 0).sum() == 1 and (eig < 0).sum() == 3)
        ok = worst < 1e-8 and bad_sig == 0
        announce(capsys, f"1 metric reconstruction [{name}]", ok,
                 f"max rel residual {worst:.2e} < 1e-8, {bad_sig} signature failures at 200 points")
        assert ok

    def test_02_indicatrix_metric(self, pset, capsys):
        name, p = pset
        plan = SamplingPlan(n_eta=16, n_theta=12, n_phi=8)
        worst, offdiag, n = 0.0, 0.0, 0
        for eta in plan.eta_grid():
            for th in plan.theta_grid(p):
                for ph in plan.phi_grid(p):
                    a = AngleTriple(float(eta), float(th), float(ph))
                    ind = indicatrix_induced_metric(a, default_frame(), p)
                    exp = expected_indicatrix_metric(a, p.H)
                    worst = max(worst, indicatrix_residual(ind, exp))
                    d = np.sqrt(np.diag(exp))
                    off = np.abs(ind - np.diag(np.diag(ind))) / np.outer(d, d)
                    offdiag = max(offdiag, float(off.max()))
                    n += 1
        ok = worst < 1e-6 and offdiag < 1e-6 and n == 16 * 12 * 8
        announce(capsys, f"2 indicatrix metric [{name}]", ok,
                 f"max residual {worst:.2e}, max off-diagonal {offdiag:.2e} on {n} grid points")
        assert ok

    def test_03_cartan_expansion(self, pset, tensor_records, capsys):
        name, _ = pset
        ce, cy = tensor_records[name]["cartan.expansion"], tensor_records[name]["cartan.annihilates-y"]
        ok = ce.max_residual < 1e-5 and cy.max_residual < 1e-6 and ce.points == 100
        announce(capsys, f"3 Cartan expansion [{name}]", ok,
                 f"expansion {ce.max_residual:.2e} < 1e-5, C y {cy.max_residual:.2e} < 1e-6 at {ce.points} points")
        assert ok

    def test_04_curvature_constancy(self, tensor_records, capsys):
        res = {k: tensor_records[k]["curv.tangent-space-tensor"] for k in SETS}
        curv = {k: -p.H**2 for k, p in SETS.items()}
        ok = all(r.max_residual < 1e-4 and r.points == 100 for r in res.values()) \
            and curv["default"] != curv["second"]
        announce(capsys, "4 curvature constancy [both]", ok,
                 ", ".join(f"{k}: {r.max_residual:.2e} (curvature {curv[k]:g})" for k, r in res.items()))
        assert ok

    def test_05_total_set_report(self, pset, reports, capsys):
        name, p = pset
        rep, _ = reports[name]
        controls = {}
        for which, model in negative_controls(p).items():
            controls[which] = len(full_report(SamplingPlan(), default_frame(), p, model=model).failed())
        ok = rep.overall and len(rep.records) >= 30 and all(n >= 1 for n in controls.values())
        announce(capsys, f"5 total report [{name}]", ok,
                 f"{len(rep.records) - len(rep.failed())}/{len(rep.records)} records pass; "
                 f"perturbed J fails {controls['J']}, perturbed U fails {controls['U']}")
        assert ok

    def test_06_ode_laws(self, pset, capsys):
        name, p = pset
        recs = verify_ode_laws(SamplingPlan(n_ode=128), p)
        ok = len(recs) == 4 and all(r.passed and r.points >= 100 and r.tolerance == 1e-7 for r in recs)
        announce(capsys, f"6 ODE list [{name}]", ok,
                 ", ".join(f"{r.id} {r.max_residual:.1e}" for r in recs))
        assert ok

    def test_07_horizontal_geometry(self, pset, capsys):
        name, p = pset
        plan = SamplingPlan(continuous=True, n_horizontal=100, seed=3, lambdas=(0.5, 1.0, 2.0))
        recs = {}
        for r in verify_horizontal(plan, p):
            recs[r.id] = r
        need = {"horiz.curvature-tensor": 1e-4, "horiz.angle-form": 1e-6, "horiz.determinant": 1e-6,
                "horiz.section-curvature": 1e-4}
        ok = all(recs[k].max_residual < tol for k, tol in need.items())
        ok = ok and recs["horiz.positive-definite"].passed and recs["horiz.curvature-tensor"].points == 100
        ok = ok and recs["horiz.section-curvature"].points >= 3
        note = recs["horiz.section-curvature"].note
        announce(capsys, f"7 horizontal geometry [{name}]", ok,
                 ", ".join(f"{k.split('.')[1]} {recs[k].max_residual:.1e}" for k in need)
                 + (f"; {note}" if note else ""))
        assert ok

    def test_08_round_trip_and_symmetry(self, pset, capsys):
        name, p = pset
        fr = default_frame()
        trip = 0.0
        for a in random_triples(p, 1000, seed=33):
            back, _ = angles_from_tangent(tangent_from_angles(a, 1.0, fr, p), fr, p)
            trip = max(trip, max(abs(x - y) for x, y in zip(back.as_tuple(), a.as_tuple())))
        rng = np.random.default_rng(8)
        homog = rot = floor = 0.0
        for a in random_triples(p, 50, seed=34):
            y = np.asarray(tangent_from_angles(a, rng.uniform(0.5, 2.0), fr, p), dtype=float)
            F = metric_function(y, fr, p)
            # relative change of F per unit relative rounding of y
            kappa = float(np.sum(np.abs(y * angle_jets(y, fr, p).dF)) / F)
            for s in np.geomspace(1e-3, 1e3, 7):
                err = abs(metric_function(s * y, fr, p) - s * F) / (s * F)
                homog = max(homog, err)
                floor = max(floor, err / (kappa * np.finfo(float).eps))
            b, w1, w2, w3 = fr.covectors @ y
            alpha = rng.uniform(-math.pi, math.pi)
            c, sn = math.cos(alpha), math.sin(alpha)
            yr = fr.compose(b, (c * w1 - sn * w2) / b, (sn * w1 + c * w2) / b, w3 / b)
            rot = max(rot, abs(metric_function(yr, fr, p) - F) / F)
        ok = trip < 1e-9 and homog < 1e-12 and rot < 1e-12
        announce(capsys, f"8 round trip and symmetry [{name}]", ok,
                 f"round trip {trip:.1e} over 1000 triples, homogeneity {homog:.1e} "
                 f"({floor:.2f} kappa eps at worst), rotation {rot:.1e}")
        assert ok

    def test_09_regularity_probe(self, pset, capsys):
        name, p = pset
        out = regularity_probe(p)
        ok = (out["bounded"] and out["max_scaled_d4_V"] < 10 and out["max_scaled_d4_r"] < 10
              and out["class_one_eta0"] is not None and out["class_one_sign_change"])
        announce(capsys, f"9 regularity probe [{name}]", ok,
                 f"scaled D4 V {out['max_scaled_d4_V']:.3g}, D4 r {out['max_scaled_d4_r']:.3g}; "
                 f"Class I (P = {out['class_one_P']:.3g}) zero at eta0 = {out['class_one_eta0']:.4g}")
        assert ok

    def test_10_runtime(self, pset, reports, capsys):
        name, _ = pset
        _, seconds = reports[name]
        ok = seconds < 60.0
        announce(capsys, f"10 runtime [{name}]", ok, f"full report in {seconds:.1f} s, single thread")
        assert ok
