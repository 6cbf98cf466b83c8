import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from voronoi_tactile.geometry import CentroidFrame  # noqa: E402
from voronoi_tactile.simulator import LayoutSpec, generate_layout  # noqa: E402


@pytest.fixture(scope="session")
def layout():
    return generate_layout(LayoutSpec())


@pytest.fixture
def unit_square():
    return CentroidFrame.from_points([[0, 0], [1, 0], [1, 1], [0, 1]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


#: (criterion number, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
