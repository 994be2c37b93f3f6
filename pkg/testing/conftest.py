import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from magbill.domain.geometry.grid import build_annulus, build_disk, build_rectangle  # noqa: E402


@pytest.fixture(scope="session")
def unit_square():
    return build_rectangle(1.0, 1.0, 16, 16)


@pytest.fixture(scope="session")
def small_disk():
    return build_disk(1.0, 8, 16)


@pytest.fixture(scope="session")
def small_annulus():
    return build_annulus(0.5, 1.0, 8, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
