import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from finsleroid.core import (DomainError, OutsideBLikeRegion, decompose, default_frame,
                             default_params, load_params, validate_params)


class TestParams:
    def test_default_derived(self):
        p = validate_params(H=2, T=2, Chat=0.25)
        assert_allclose(p.P, 2.0)
        assert_allclose(p.C7, 0.5)
        assert_allclose(p.H1, math.sqrt(3) / 2)
        assert_allclose(p.S1, 1 / math.sqrt(2))
        assert_allclose(p.Tstar, -3.0)
        assert p.Cstar == 0.0 and p.C1 == 1.0

    def test_second_set(self):
        p = validate_params(H=1.5, T=3, Chat=0.2)
        assert_allclose(p.P, 5 / 3)
        assert p.A > 0
        assert 0 < p.H1 < 1 and 0 < p.S1 < 1

    def test_theta_c(self):
        # cos theta_c = -sqrt((T - 1)/T) = -sqrt(1/2) for T = 2
        assert_allclose(default_params().theta_c, 3 * math.pi / 4)

    @pytest.mark.parametrize("raw, needle", [
        (dict(H=2, T=0.5, Chat=0.25), "T > 1"),
        (dict(H=2, T=3, Chat=0.4), "TChat < 1"),
        (dict(H=1, T=2, Chat=0.25), "H > 1"),
        (dict(H=2, T=2, Chat=1.5), "Chat"),
        (dict(H=2, T=2, Chat=0.25, C17=0), "C17"),
    ])
    def test_rejects(self, raw, needle):
        with pytest.raises(DomainError, match=needle):
            validate_params(raw)

    def test_unknown_key(self):
        with pytest.raises(DomainError):
            validate_params(H=2, T=2, Chat=0.25, bogus=1)

    def test_load_json(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"H": 1.5, "T": 3, "Chat": 0.2, "C11": 2.0}))
        p = load_params(path)
        assert p.C11 == 2.0 and p.C39 == 1.0
        assert load_params(None) == default_params()

    def test_replace(self, p):
        q = p.replace(C1=4.0)
        assert q.C1 == 4.0 and q.H == p.H


class TestFrame:
    def test_canonical_background(self):
        fr = default_frame()
        assert_allclose(fr.a, np.diag([1.0, -1.0, -1.0, -1.0]))
        assert_allclose(fr.ainv @ fr.a, np.eye(4), atol=1e-15)

    def test_orthonormal(self):
        fr = default_frame()
        gram = fr.covectors @ fr.ainv @ fr.covectors.T
        assert_allclose(gram, np.diag([1.0, -1.0, -1.0, -1.0]), atol=1e-15)

    def test_compose_inverts_covectors(self):
        fr = default_frame()
        y = fr.compose(2.0, 0.1, -0.3, 0.4)
        assert_allclose(fr.covectors @ np.array(y), [2.0, 0.2, -0.6, 0.8])


class TestDecompose:
    def test_pure_b(self):
        s = decompose([1, 0, 0, 0])
        assert s.w1 == s.w2 == s.w3 == s.wperp == 0.0

    def test_arithmetic(self):
        s = decompose([2, 1, 1, 0])
        assert s.b == 2.0
        assert_allclose([s.w1, s.w2, s.w3, s.t, s.wperp], [0.5, 0.5, 0.0, 1.0, math.sqrt(0.5)])

    def test_negative_b(self):
        with pytest.raises(OutsideBLikeRegion):
            decompose([-1, 0, 0, 0])

    def test_scaling(self):
        rng = np.random.default_rng(3)
        y = np.array([2.0, 0.3, -0.2, 0.5])
        for s in rng.uniform(0.01, 100, 5):
            a, b = decompose(y), decompose(s * y)
            assert_allclose(b.b, s * a.b)
            assert_allclose([b.w1, b.w2, b.w3, b.t], [a.w1, a.w2, a.w3, a.t], rtol=1e-14)
