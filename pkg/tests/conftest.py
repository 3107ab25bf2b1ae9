import numpy as np
import pytest

from tangentia.closed_form import TETRAHEDRON
from tangentia.core import SphereArrangement


def random_arrangement(n: int, seed: int) -> SphereArrangement:
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(2 * n - 2, n))
    radii = rng.uniform(0.5, 1.5, size=2 * n - 2)
    return SphereArrangement.from_arrays(centers, radii)


def tetrahedron(r: float) -> SphereArrangement:
    return SphereArrangement.from_arrays(TETRAHEDRON, r)


def random_rotation(n: int, rng) -> np.ndarray:
    q, rr = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(rr))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
