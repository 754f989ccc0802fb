import numpy as np
import pytest

from spectralens.datamatrix import preprocess
from spectralens.synth import PopulationCovariance, RngSeed, sample_gaussian


@pytest.fixture(scope="session")
def cgd_full():
    """Centered CGD(d=1000, c=1, alpha=0.25) with M=50000 samples.

    Shared by the r-statistics, spacing, and power-law acceptance tests;
    generation dominates their runtime so it is drawn once per session.
    """
    cov = PopulationCovariance.toeplitz(1000, c=1.0, alpha=0.25)
    return preprocess(sample_gaussian(cov, 50000, RngSeed(7)))


@pytest.fixture(scope="session")
def cgd_small():
    """Cheap CGD(d=300, alpha=0.25, M=4000) for unit-level pipeline tests."""
    cov = PopulationCovariance.toeplitz(300, c=1.0, alpha=0.25)
    return preprocess(sample_gaussian(cov, 4000, RngSeed(3)))


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow",
        action="store_true",
        default=False,
        help="skip the long-running acceptance criteria",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance test")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    marker = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(marker)
