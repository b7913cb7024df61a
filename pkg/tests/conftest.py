import numpy as np
import pytest
from hypothesis import settings

from polarbandit.graph import WeightedGraph

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture
def p2():
    """Two nodes joined by a unit edge."""
    return WeightedGraph.from_edges(2, [(0, 1, 1.0)])


@pytest.fixture
def p2_forest():
    return np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0


def random_symmetric(rng, n):
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2


_VERDICTS = []


@pytest.fixture
def verdict(capsys):
    """Print one ``PASS``/``FAIL`` line and keep it for the end-of-session digest."""

    def emit(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}"
        _VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
