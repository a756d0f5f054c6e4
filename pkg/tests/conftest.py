import pytest
from hypothesis import HealthCheck, settings

from specflow.fixtures import context, roof_preset, sqrt3_basis

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def golden():
    return context("golden")


@pytest.fixture(scope="session")
def sqrt2m1():
    return context("sqrt2m1")


@pytest.fixture(scope="session")
def basis(golden):
    return sqrt3_basis(golden)


@pytest.fixture(scope="session")
def f1(golden):
    return roof_preset("example1", golden)
