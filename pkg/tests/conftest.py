import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from formguide.astro import QnsElements, mean_motion, osc_to_mean
from formguide.guidance import GuidanceConfig, GridModel, build_grid


@pytest.fixture(scope="session")
def chief_leo_osc() -> QnsElements:
    """Chief of the PCO/cartwheel scenarios (osculating, at t0)."""
    return QnsElements(
        a=6978e3,
        theta=math.radians(90.0),
        ex=1e-3,
        ey=0.0,
        inc=math.radians(97.87),
        raan=0.0,
        flavor="osculating",
    )


@pytest.fixture(scope="session")
def chief_leo(chief_leo_osc) -> QnsElements:
    return osc_to_mean(chief_leo_osc)


@pytest.fixture(scope="session")
def period_leo(chief_leo) -> float:
    return 2.0 * math.pi / mean_motion(chief_leo.a)


@pytest.fixture(scope="session")
def config() -> GuidanceConfig:
    return GuidanceConfig()


@pytest.fixture(scope="session")
def r2_states():
    y0 = np.array(
        [[0, 0, -500, 0, 0, 0], [0, 0, -250, 0, 0, 0],
         [0, 0, 250, 0, 0, 0], [0, 0, 500, 0, 0, 0]], dtype=float
    )
    yf = np.array(
        [[0, 34.56, 0, -250, 0, -250], [0, 17.28, 0, -125, 0, -125],
         [0, -17.28, 0, 125, 0, 125], [0, -34.56, 0, 250, 0, 250]], dtype=float
    )
    return y0, yf


@pytest.fixture(scope="session")
def r1_states():
    y0 = np.array(
        [[0, 0, 0, -150, 300, 0],
         [0, -35.91, -129.90, -75, 150, -259.81],
         [0, -35.91, -129.90, 75, -150, -259.81],
         [0, 0, 0, 150, -300, 0],
         [0, 35.91, 129.90, 75, -150, 259.81],
         [0, 35.91, 129.90, -75, 150, 259.81]], dtype=float
    )
    yf = np.array(
        [[0, 0, -500, 0, 0, 0], [0, 0, -333.33, 0, 0, 0],
         [0, 0, -166.67, 0, 0, 0], [0, 0, 166.67, 0, 0, 0],
         [0, 0, 333.33, 0, 0, 0], [0, 0, 500, 0, 0, 0]], dtype=float
    )
    return y0, yf


@pytest.fixture(scope="session")
def model_r2_005(chief_leo, period_leo) -> GridModel:
    """Five-orbit grid at 0.05-orbit thrust arcs (the closed-loop setting)."""
    grid = build_grid(0.0, 5.0 * period_leo, 0.05, 100.0, chief_leo)
    return GridModel(grid, chief_leo)


@pytest.fixture(scope="session")
def model_short(chief_leo, period_leo) -> GridModel:
    """Eight-cycle grid: small but with enough argument-of-latitude spread
    for in-plane targets to be reachable."""
    grid = build_grid(0.0, 8 * (0.05 * period_leo + 100.0) + 1e-7, 0.05, 100.0, chief_leo)
    return GridModel(grid, chief_leo)
