import numpy as np
import pytest

from ahxray.geometry import AHModel, ConformalBump, ModelKind


@pytest.fixture(scope="session")
def disk():
    return AHModel(ModelKind.POINCARE_DISK)


@pytest.fixture(scope="session")
def perturbed():
    bump = ConformalBump(center=(0.25, -0.1), radius=0.3, amplitude=0.04)
    return AHModel(ModelKind.CONFORMAL_PERTURBED, bump=bump)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
