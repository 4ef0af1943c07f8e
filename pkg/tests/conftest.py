import numpy as np
import pytest

from fairclass.data import LabeledDataset


def make_dataset(rng, n1=8, n2=7, p=12, shift=1.0):
    X = rng.standard_normal((n1 + n2, p))
    X[:n1, : max(1, p // 4)] += shift
    y = np.repeat([1, 2], [n1, n2])
    return LabeledDataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_ds(rng):
    return make_dataset(rng)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line; all lines are echoed in the terminal summary."""

    def emit(criterion, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"ACCEPTANCE {criterion}: {status} | {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
