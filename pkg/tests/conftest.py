import pytest

from anomalkpp.bounds import run_certificate
from anomalkpp.estimators import measure
from anomalkpp.linear_analysis import Params

# the long canonical runs are shared between module and acceptance tests


@pytest.fixture(scope="session")
def iv_measurement():
    return measure(Params(0.5, 2.0, 1.0), t_end=300.0, dx=0.05, window=(150.0, 300.0))


@pytest.fixture(scope="session")
def iii_measurement():
    return measure(Params(3.0, 0.5, 1.0), t_end=300.0, dx=0.05, window=(150.0, 300.0))


@pytest.fixture(scope="session")
def uncoupled_measurement():
    return measure(Params(0.5, 2.0, 0.0), t_end=300.0, dx=0.05, window=(150.0, 300.0))


@pytest.fixture(scope="session")
def canonical_certificate():
    return run_certificate(Params(0.5, 2.0, 1.0))
