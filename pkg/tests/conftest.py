"""Shared operator fixtures.

The same six operators recur across the suite: the three free operators
(closed-form boundary data, so every numerical route has an exact target),
one genuinely periodic example per lattice family, and patched variants
whose local defects the reflectionless tests must detect.
"""

import numpy as np
import pytest

from acspectra.cmv import VerblunskyCoefficients
from acspectra.jacobi import JacobiCoefficients
from acspectra.schrodinger import PiecewisePotential


@pytest.fixture(scope="session")
def free_jacobi():
    return JacobiCoefficients(period=1, a_base=(1.0,), b_base=(0.0,))


@pytest.fixture(scope="session")
def period2_jacobi():
    # bands [-sqrt5, -1] u [1, sqrt5]
    return JacobiCoefficients(period=2, a_base=(1.0, 1.0), b_base=(1.0, -1.0))


@pytest.fixture(scope="session")
def free_cmv():
    return VerblunskyCoefficients(period=1, alpha_base=(0.0,))


@pytest.fixture(scope="session")
def geronimus_cmv():
    # constant alpha = 1/2: ac spectrum is the arc [pi/3, 5pi/3]
    return VerblunskyCoefficients(period=1, alpha_base=(0.5,))


@pytest.fixture(scope="session")
def free_schrodinger():
    return PiecewisePotential(period=1.0, pieces=((1.0, 0.0),))


@pytest.fixture(scope="session")
def square_well():
    # V = 5 on half of each unit cell; two gaps below 25
    return PiecewisePotential(period=1.0, pieces=((0.5, 0.0), (0.5, 5.0)))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260814)
