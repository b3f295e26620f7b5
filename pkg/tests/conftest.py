import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vccrecon import (
    VccEspiritCalibration,
    make_phantom,
    simulate_kspace,
)

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def smooth_truth():
    """96x96, 8 coils, smooth phase only, fixed seed."""
    return make_phantom(96, 8, hf_blobs=0, seed=42)


@pytest.fixture(scope="session")
def smooth_ksp(smooth_truth):
    return simulate_kspace(smooth_truth)


@pytest.fixture(scope="session")
def hf_truth():
    """Same phantom with three high-frequency phase blobs."""
    return make_phantom(96, 8, hf_blobs=3, seed=42)


@pytest.fixture(scope="session")
def hf_ksp(hf_truth):
    return simulate_kspace(hf_truth)


@pytest.fixture(scope="session")
def support3(hf_truth):
    """Support broadcast over the coil axis."""
    s = hf_truth.support
    return np.broadcast_to(s[:, :, None], s.shape + (8,))


@pytest.fixture(scope="session")
def smooth_vcc1(smooth_ksp):
    """Single-set phase-aware calibration on the smooth phantom, defaults."""
    return VccEspiritCalibration(nsets=1).fit(smooth_ksp)


@pytest.fixture(scope="session")
def hf_vcc1(hf_ksp):
    return VccEspiritCalibration(nsets=1).fit(hf_ksp)


@pytest.fixture(scope="session")
def hf_vcc2(hf_ksp):
    return VccEspiritCalibration(nsets=2).fit(hf_ksp)
