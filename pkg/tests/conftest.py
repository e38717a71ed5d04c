import numpy as np
import pytest

from akira_kit import CameraIntrinsics


@pytest.fixture
def intr200():
    """Square 200x200 camera used by the worked numeric examples."""
    return CameraIntrinsics(fx=100.0, fy=100.0, cx=100.0, cy=100.0, width=200, height=200)


@pytest.fixture
def intr_small():
    return CameraIntrinsics(fx=120.0, fy=110.0, cx=63.5, cy=47.5, width=128, height=96)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
