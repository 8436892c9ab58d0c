import numpy as np
import pytest

from molab.grid import Ball, Box, Grid, ball_family
from molab.growth import WeightSpec, ky_log, power, weighted_power


@pytest.fixture(scope="session")
def grid1d():
    return Grid(box=Box(lo=(-2.0,), hi=(2.0,)), res=(512,))


@pytest.fixture(scope="session")
def family1d(grid1d):
    return ball_family(grid1d, center_stride=128, radii_levels=3, min_radius_cells=32)


@pytest.fixture(scope="session")
def grid2d():
    return Grid(box=Box(lo=(-1.0, -1.0), hi=(1.0, 1.0)), res=(64, 64))


@pytest.fixture(scope="session")
def family2d(grid2d):
    return ball_family(grid2d, center_stride=16, radii_levels=2, min_radius_cells=8)


@pytest.fixture(scope="session")
def growth_zoo():
    return {
        "power1": power(1.0),
        "power05": power(0.5),
        "power075": power(0.75),
        "weighted13": weighted_power(1.0, WeightSpec(kind="abs_power", a=1.0 / 3.0)),
        "weighted_c": weighted_power(1.0, WeightSpec(kind="constant", c=3.0)),
        "kylog": ky_log(),
    }


@pytest.fixture()
def rng():
    return np.random.default_rng(20260818)
