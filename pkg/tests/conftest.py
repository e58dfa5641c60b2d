import os
from pathlib import Path

import numpy as np
import pytest

from fracfilter import synthetic


def _path_to_tests():
    """Returns absolute path to the tests/ directory
    """
    return Path(__file__).absolute().parent


@pytest.fixture
def root_path():
    """Returns absolute path to the root directory
    """
    return _path_to_tests().parent


@pytest.fixture
def tmp_empty(tmp_path):
    """Creates a temporary empty folder and moves to it
    """
    old = os.getcwd()
    os.chdir(str(tmp_path))
    yield str(Path(tmp_path).resolve())
    os.chdir(old)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope='session')
def koch():
    """Level 5 Von Koch curve on a 512 x 512 grid
    """
    return synthetic.koch_raster(size=512, level=5)


@pytest.fixture(scope='session')
def curve_fixture():
    """(image, ground truth) with three curves over a textured background
    """
    return synthetic.curve_image((128, 128), seed=0)


def horizontal_line(shape=(21, 21), row=None, value=1.0, background=0.0):
    img = np.full(shape, background, dtype=np.float64)
    img[shape[0] // 2 if row is None else row, :] = value
    return img
