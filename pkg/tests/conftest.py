import numpy as np
import pytest

from qnnsim.dynamics import TimeGrid, ParameterSchedule
from qnnsim.qcore import DensityMatrix

# One line per acceptance criterion, shown after the test summary so a plain
# `pytest -v` run surfaces them without -s.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_grid():
    return TimeGrid(30.0, 30)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(rng, dim: int) -> DensityMatrix:
    """Random full-rank physical state (Wishart construction)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_pure(rng, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_schedule(rng, grid: TimeGrid, scale: float = 1e-3) -> ParameterSchedule:
    n = grid.n_steps
    return ParameterSchedule(grid,
                             k=0.002 + scale * rng.normal(size=n),
                             epsilon=1e-4 + scale * rng.normal(size=n),
                             zeta=2e-4 + scale * rng.normal(size=n))
