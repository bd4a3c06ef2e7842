import numpy as np
import pytest

from mixfbm import TimeGrid, build_family


def mc_se_of_variance(samples: np.ndarray) -> float:
    """Standard error of the sample variance (fourth-moment form)."""
    x = samples - samples.mean()
    n = len(x)
    return float(np.sqrt((np.mean(x**4) - np.mean(x**2) ** 2) / n))


@pytest.fixture(scope="session")
def fam07_128():
    return build_family(TimeGrid(1.0, 128), 0.7)


@pytest.fixture(scope="session")
def fam07_256():
    return build_family(TimeGrid(1.0, 256), 0.7)


@pytest.fixture(scope="session")
def fam05_64():
    return build_family(TimeGrid(1.0, 64), 0.5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
