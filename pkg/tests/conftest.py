import numpy as np
import pytest
from hypothesis import settings

from sparsedom.dyadic import Grid

settings.register_profile("suite", deadline=None, max_examples=25,
                          derandomize=True)
settings.load_profile("suite")


@pytest.fixture
def unit_grid():
    """[0, 1) at level 6 (64 cells)."""
    return Grid(1, (0.0,), 1.0, 6)


@pytest.fixture
def sym_grid():
    """[-0.5, 0.5) at level 6, symmetric about 0."""
    return Grid(1, (-0.5,), 1.0, 6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
