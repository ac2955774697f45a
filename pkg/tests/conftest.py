import numpy as np
import pytest

from alfeld_elast.materials import ComplianceTensor
from alfeld_elast.mesh import alfeld_split, generate_cube_mesh, reference_simplex


@pytest.fixture(scope="session")
def material():
    return ComplianceTensor.from_young(1.0, 0.3)


@pytest.fixture(scope="session")
def ref_tet():
    return alfeld_split(reference_simplex(3))


@pytest.fixture(scope="session")
def cube1():
    return alfeld_split(generate_cube_mesh(1))


@pytest.fixture(scope="session")
def cube2():
    return alfeld_split(generate_cube_mesh(2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion_report():
    """Record the one-line verdict of an acceptance criterion for the terminal summary."""
    def record(number, ok, text):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
