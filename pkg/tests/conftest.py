import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from aqiforecast.lagged import build_lag_dataset, chrono_split
from aqiforecast.synthetic import synthetic_series

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

EPA_ENV = "AQIFORECAST_EPA_DIR"


@pytest.fixture(scope="session")
def pm25_series():
    return synthetic_series("PM25", seed=11)


@pytest.fixture(scope="session")
def o3_series():
    return synthetic_series("O3", seed=12)


@pytest.fixture(scope="session")
def pm25_split(pm25_series):
    return chrono_split(build_lag_dataset(pm25_series, 1))


@pytest.fixture(scope="session")
def o3_split(o3_series):
    return chrono_split(build_lag_dataset(o3_series, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Acceptance outcomes, one line per criterion, echoed in the terminal summary
# so they survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
