import numpy as np
import pytest

from ttolab.inner import make_blaschke


def random_zeros(rng, degree, rmax=0.9):
    r = rmax * np.sqrt(rng.uniform(size=degree))
    return r * np.exp(2j * np.pi * rng.uniform(size=degree))


def random_theta(rng, degree, origin=False, rmax=0.9):
    """Random Blaschke product; with ``origin`` the first zero sits at 0."""
    zeros = random_zeros(rng, degree, rmax)
    if origin:
        zeros[0] = 0.0
    front = np.exp(2j * np.pi * rng.uniform())
    return make_blaschke(zeros, front)


def random_coef(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
