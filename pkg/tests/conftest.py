import numpy as np
import pytest

from kleinwalk.conformal import critical_exponent_fit
from kleinwalk.groups import enumerate_orbit, load_preset
from kleinwalk.walks import StepDistribution


@pytest.fixture(scope="session")
def gamma2():
    return load_preset("gamma2")


@pytest.fixture(scope="session")
def schottky2():
    return load_preset("schottky2")


@pytest.fixture(scope="session")
def kleinian_pp():
    return load_preset("kleinian_pp")


@pytest.fixture(scope="session")
def gamma2_orbit14(gamma2):
    return enumerate_orbit(gamma2, 14)


@pytest.fixture(scope="session")
def gamma2_fit14(gamma2_orbit14):
    return critical_exponent_fit(gamma2_orbit14)


@pytest.fixture(scope="session")
def kleinian_orbit12(kleinian_pp):
    return enumerate_orbit(kleinian_pp, 12)


def rand_ball_point(rng, radius=0.85):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * (radius * rng.random() ** (1.0 / 3.0))


def rand_sphere_point(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


@pytest.fixture
def uniform_mu():
    def make(spec):
        return StepDistribution.uniform(spec)

    return make
