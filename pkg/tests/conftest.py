import numpy as np
import pytest

from isl.fuchsian import FuchsianFamily


def diag(t):
    return np.diag([t, -t]).astype(np.complex128)


def commuting_family(thetas, points):
    """Diagonal residues; the last one absorbs nothing since diagonal sums are diagonal."""
    return FuchsianFamily(points, [diag(t) for t in thetas])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
