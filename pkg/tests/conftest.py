"""Shared eigensystems; solved once per session since every module leans on them."""

import pytest

from cutofflab.potential import Potential
from cutofflab.spectrum import solve_eigensystem

GAMMAS = {
    "ou": 1.0,
    "half": 0.5,
    "quarter": 0.25,
    "third": 1.0 / 3.0,
    "quartic": 2.0,
}


@pytest.fixture(scope="session")
def eigensystems():
    """gamma -> EigenSystem with 5 excited modes, default grids."""
    return {g: solve_eigensystem(Potential(g), 5) for g in GAMMAS.values()}


@pytest.fixture(scope="session")
def es_ou(eigensystems):
    return eigensystems[1.0]


@pytest.fixture(scope="session")
def es_half(eigensystems):
    return eigensystems[0.5]


@pytest.fixture(scope="session")
def es_quarter(eigensystems):
    return eigensystems[0.25]


@pytest.fixture(scope="session")
def es_quartic(eigensystems):
    return eigensystems[2.0]
