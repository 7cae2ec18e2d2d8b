import numpy as np
import pytest

from invlp.dynamics import SystemSpec
from invlp.geometry import Ball, Box


@pytest.fixture
def square():
    return Box([-1, -1], [1, 1])


@pytest.fixture
def disk():
    return Ball([0, 0], 1.0)


@pytest.fixture
def julia():
    return SystemSpec("julia", a=(-0.7, 0.2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_criterion(label, passed, detail=""):
    """Remember one acceptance outcome for the end-of-run summary."""
    line = f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
