import os

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def random_instances(count, seed=20240611, n_range=(2, 12), e_range=(0.0, 5.0), beta_range=(0.1, 3.0)):
    """Random complete-graph instances: (energies, beta)."""
    rng = np.random.default_rng(int(os.environ.get("MPEMBA_SEED", seed)))
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        yield rng.uniform(*e_range, size=n), float(rng.uniform(*beta_range))


@pytest.fixture
def rng():
    return np.random.default_rng(int(os.environ.get("MPEMBA_SEED", 12345)))


@pytest.fixture
def fig1():
    return np.array([0.0, 0.5, 2.0]), 0.5


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
