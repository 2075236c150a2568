import pytest

import holocheck as hc


@pytest.fixture(scope="session")
def model():
    return hc.warped_metric()


@pytest.fixture(scope="session")
def euclid():
    return hc.euclidean_metric()


@pytest.fixture(scope="session")
def cat():
    return hc.validate_toral_matrix([[2, 1], [1, 1]])


@pytest.fixture(scope="session")
def frame(cat):
    return hc.eigen_basis(cat)


@pytest.fixture(scope="session")
def cfg():
    return hc.IntegratorConfig()
