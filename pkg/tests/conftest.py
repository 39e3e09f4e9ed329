import pytest

from springbench.mechanics import calibrate_load_train
from springbench.model import BilinearMaterial, LoadTrain, SensorSpec, SpecimenGeometry
from springbench.simulator import Bench

# 100 MPa per 0.9 um of actuator travel (and 300 MPa per 2.7 um, ...)
TARGET_C = 1e8 / 0.9e-6
K1 = 15_000.0


@pytest.fixture
def cu300_geometry():
    return SpecimenGeometry(300e-9)


@pytest.fixture
def cu300():
    return BilinearMaterial(103e9, 410e6, 575e6, fatigue_strength_coeff=64.9145937e6, name="cu-300nm")


@pytest.fixture
def calibrated_train(cu300_geometry):
    return LoadTrain(K1, calibrate_load_train(TARGET_C, cu300_geometry, 103e9, K1))


@pytest.fixture
def cu300_bench(cu300_geometry, cu300, calibrated_train):
    return Bench(cu300_geometry, cu300, calibrated_train, SensorSpec())


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
