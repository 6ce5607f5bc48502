# @see https://docs.pytest.org/en/latest/how-to/writing_hook_functions.html

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from chaoscluster.potential import PairPotential
from chaoscluster.types import ModelParams

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator shared by randomized tests.

    Returns:
        np.random.Generator: Generator with a fixed seed.
    """
    return np.random.default_rng(20240601)


@pytest.fixture
def hard_sphere() -> PairPotential:
    """Hard core of radius 1/2."""
    return PairPotential.hard_sphere(0.5)


@pytest.fixture
def square_well() -> PairPotential:
    """Hard core 1/2 with a well of depth 1 up to 1."""
    return PairPotential.square_well(0.5, 0.5, 1.0, declared_B=3.0)


@pytest.fixture
def ideal() -> PairPotential:
    """The zero potential with range 1/2."""
    return PairPotential.ideal(0.5)


@pytest.fixture
def params_2d() -> ModelParams:
    """beta = 1, eps = 0.1 in the plane."""
    return ModelParams(beta=1.0, eps=0.1, dim=2)


@pytest.fixture
def config_dir() -> Path:
    """Directory of the bundled experiment configs."""
    return CONFIG_DIR


def pytest_addoption(parser):
    """Parse command line options
        True if --runslow,
        False otherwise
        Hold as a variable
    Args:
        parser (): args

    Returns
    -------
    """
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="Run a test that takes a long time to run",
    )


def pytest_configure(config):
    """$ pytest --markers
    Add a description of the markers that can be referenced with the above command.

    Args:
    ----
        config ():

    Returns:
    -------

    """
    config.addinivalue_line(
        "markers", "runslow: Mark of a test that takes a long time to run"
    )


def pytest_collection_modifyitems(session, config, items):
    """Apply automatic skipping based on command-line options.

    - --runslow が無いとき: 'runslow' マーク付きテストを skip
    """
    if config.getoption("--runslow"):
        return

    skip_runslow = pytest.mark.skip(reason="The option --runslow is required to run.")

    for item in items:
        if "runslow" in item.keywords:
            item.add_marker(skip_runslow)
