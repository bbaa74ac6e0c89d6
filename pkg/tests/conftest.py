import time

import numpy as np
import pytest

from jmlab import linalg as la
from jmlab.tolerances import Tolerances

SUITE_BUDGET_S = 120.0
ACCEPTANCE_LINES: list[str] = []
_START = {}


def pytest_sessionstart(session):
    _START["t"] = time.perf_counter()


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    """Print and remember one acceptance line; the terminal summary repeats them."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    print(line)
    ACCEPTANCE_LINES.append(line)


def _elapsed() -> float:
    return time.perf_counter() - _START.get("t", time.perf_counter())


def pytest_sessionfinish(session, exitstatus):
    if ACCEPTANCE_LINES and _elapsed() >= SUITE_BUDGET_S and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    elapsed = _elapsed()
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    ok = elapsed < SUITE_BUDGET_S
    terminalreporter.write_line(
        f"criterion 10 {'PASS' if ok else 'FAIL'}: full suite wall-clock {elapsed:.1f} s < {SUITE_BUDGET_S:.0f} s")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def qubit_anchor():
    return la.SIGMA_X, la.SIGMA_Y, la.KET0
