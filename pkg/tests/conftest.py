import numpy as np
import pytest

from trefftz_poly.geometry import Rectangle, generate_mesh
from trefftz_poly.material import Material


def regular_polygon(n, radius=1.0, center=(0.0, 0.0), phase=0.0):
    t = phase + 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def random_convex_polygon(rng, n_min=3, n_max=9):
    """Random convex CCW polygon inscribed in a jittered ellipse."""
    n = int(rng.integers(n_min, n_max + 1))
    while True:
        t = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.append(t, t[0] + 2 * np.pi))
        if gaps.min() > 0.15 and gaps.max() < np.pi - 0.1:
            break
    ax = rng.uniform(0.5, 2.0, 2)
    c = rng.normal(size=2) * 3.0
    return np.column_stack([c[0] + ax[0] * np.cos(t), c[1] + ax[1] * np.sin(t)])


UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def unit_square():
    return UNIT_SQUARE.copy()


@pytest.fixture
def steel_like():
    return Material(1.0, 0.3)


@pytest.fixture(scope="session")
def square_mesh_20():
    return generate_mesh(Rectangle(1.0, 1.0), 20, seed=3)


#: ``(criterion, passed, detail)`` lines collected by the acceptance suite
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
