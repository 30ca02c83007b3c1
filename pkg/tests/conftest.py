import numpy as np
import pytest

from halfline.benchmarks import bargmann_case, krein_case, resonance_case, sech2
from halfline.types import PotentialGrid


@pytest.fixture(scope="session")
def resonance():
    return resonance_case(1.0)


@pytest.fixture(scope="session")
def bargmann():
    return bargmann_case(1.0, 1.0)


@pytest.fixture(scope="session")
def krein12():
    return krein_case(1.0, 2.0)


@pytest.fixture(scope="session")
def sech2_grid():
    xs = np.linspace(0.0, 20.0, 2001)
    return PotentialGrid(xs, sech2(xs))


@pytest.fixture(scope="session")
def box():
    def make(a=1.0, depth=1.0, X=None, dx=1e-3):
        X = a if X is None else X
        xs = np.linspace(0.0, X, int(round(X / dx)) + 1)
        qs = np.where(xs <= a, depth, 0.0)
        return PotentialGrid(xs, qs, a, "compact")
    return make


@pytest.fixture(scope="session")
def kgrid():
    return np.arange(0.0, 200.0 + 1e-9, 0.025)


@pytest.fixture(scope="session")
def acceptance(request):
    """Record one summary line per acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(n: int, passed: bool, detail: str) -> bool:
        line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((n, line))
        print(line)
        return passed
    return record


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
