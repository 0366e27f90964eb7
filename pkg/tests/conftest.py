import math

import numpy as np
import pytest

from finsleroid.core import default_params, validate_params
from finsleroid.inversion import AngleTriple


SECOND_SET = dict(H=1.5, T=3.0, Chat=0.2)


@pytest.fixture
def p():
    return default_params()


@pytest.fixture(params=["default", "second"])
def pset(request):
    if request.param == "default":
        return default_params()
    return validate_params(**SECOND_SET)


def random_triples(p, n, seed=0, eta_range=(1e-2, 6.0), margin=0.05):
    """Admissible angle triples: eta log-uniform, theta and phi uniform inside margins."""
    rng = np.random.default_rng(seed)
    half = math.pi / 2 - margin
    out = []
    for _ in range(n):
        eta = math.exp(rng.uniform(math.log(eta_range[0]), math.log(eta_range[1])))
        theta = rng.uniform(margin, p.theta_c - margin)
        phi = p.Cstar + rng.uniform(-half, half) / math.sqrt(p.Chat)
        out.append(AngleTriple(eta, theta, phi))
    return out
