import numpy as np
import pytest

from zenoqst import SystemSpec, build_basis, filter_excitation

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def two_node_full():
    return build_basis(SystemSpec(2, 1, 1))


@pytest.fixture(scope="session")
def two_node_sector(two_node_full):
    return filter_excitation(two_node_full, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
