import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from psfeec.mesh import powell_sabin_refine, reference_split, unit_square_mesh

settings.register_profile("psfeec", deadline=None, max_examples=25, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("psfeec")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def ref():
    return reference_split()


@pytest.fixture(scope="session")
def square():
    """Two-triangle unit square after refinement."""
    return powell_sabin_refine(unit_square_mesh(1))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def emit(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
