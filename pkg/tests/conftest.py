import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ngm", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ngm")


def pytest_addoption(parser):
    parser.addoption("--run-extended", action="store_true", default=False,
                     help="run the long n=1000 reproduction checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "extended: long-running reproduction check")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-extended") or os.environ.get("NGM_EXTENDED") == "1":
        return
    skip = pytest.mark.skip(reason="extended check; use --run-extended or NGM_EXTENDED=1")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def central_diff(f, x, j, h=1e-5):
    e = np.zeros_like(x)
    e[j] = h
    return (f(x + e) - f(x - e)) / (2 * h)


def rel_err(approx, exact, floor=1e-3):
    """Relative error, with an absolute floor for values near zero."""
    return abs(approx - exact) / max(abs(exact), floor)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
