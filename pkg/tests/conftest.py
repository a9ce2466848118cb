import numpy as np
import pytest

from rsklpr.dataset import DataSet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sine_data(rng):
    X = np.sort(rng.uniform(0, 1, 200))
    y = np.sin(2 * np.pi * X) + rng.normal(0, 0.2, X.size)
    return DataSet(X, y)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} [{label}] {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
