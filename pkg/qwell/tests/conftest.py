# qwell/tests/conftest.py
import os
import tempfile

# Set test environment variables BEFORE any qwell imports
if "QWELL_LOG_DIR" not in os.environ:
    os.environ["QWELL_LOG_DIR"] = tempfile.mkdtemp(prefix="qwell-logs-")
os.environ.setdefault("QWELL_THREADS", "1")

import numpy as np
import pytest

from qwell.modules.spectral_core.basis import BasisSpec
from qwell.modules.spectral_core.coupling import build_coupling_data
from qwell.modules.spectral_core.dipole import DipoleMoment

# mu = x^3 in closed form, c = 1 / pi^2
C = 1.0 / np.pi ** 2
CUBIC_A = 0.675 * C - 3.1640625 * C ** 2 + 1.8984375 * C ** 3
CUBIC_B = 15.0 / 16.0 * C ** 3


def cubic_diag(j: int) -> float:
    """<x^3 phi_j, phi_j>."""
    return 0.25 - 3.0 / (4.0 * j ** 2 * np.pi ** 2)


def cubic_grad(j: int) -> float:
    """<(3 x^2)^2 phi_j, phi_j>."""
    return 9.0 / 5.0 - 9.0 * C / j ** 2 + 13.5 * C ** 2 / j ** 4


@pytest.fixture
def cubic():
    return DipoleMoment.cubic()


@pytest.fixture(scope="session")
def data2():
    """x^3 coupling data for two particles on 16 modes."""
    return build_coupling_data(DipoleMoment.cubic(), BasisSpec(K_max=16), N=2)


@pytest.fixture(scope="session")
def data3():
    """x^3 coupling data for three particles on 16 modes."""
    return build_coupling_data(DipoleMoment.cubic(), BasisSpec(K_max=16), N=3)


@pytest.fixture(scope="session")
def data3_small():
    """x^3 coupling data for three particles on 12 modes (reference builds)."""
    return build_coupling_data(DipoleMoment.cubic(), BasisSpec(K_max=12), N=3)


@pytest.fixture(scope="session")
def linear_data():
    """mu = x: several couplings vanish and every diagonal entry is 1/2."""
    return build_coupling_data(DipoleMoment.polynomial([0.0, 1.0]), BasisSpec(K_max=16), N=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
