import numpy as np
import pytest

from opendraw import CrackLengthDist, FractureSetup, Material, OuParams, WebGeometry

# machine/material defaults used throughout the examples
SPAN = 1.0
HALF_WIDTH = 0.6
THICKNESS = 8e-5
YOUNGS = 4e9
G_C = 6500.0
BAND = 3.5e5


@pytest.fixture(scope="session")
def frac():
    geom = WebGeometry(span=SPAN, half_width=HALF_WIDTH, thickness=THICKNESS)
    mat = Material(youngs=YOUNGS, g_c=G_C)
    return FractureSetup.with_default_table(geom, mat)


@pytest.fixture(scope="session")
def dist15():
    return CrackLengthDist.from_mean(0.015, 0.8)


@pytest.fixture(scope="session")
def dist05():
    return CrackLengthDist.from_mean(0.005, 0.8)


@pytest.fixture
def ou():
    def make(t0=350.0, a=1.0, c_t=0.1):
        return OuParams.from_cv(t0, a, c_t)

    return make


def seedseq(*key):
    return np.random.SeedSequence(20260810, spawn_key=tuple(key))
