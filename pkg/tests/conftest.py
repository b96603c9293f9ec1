"""Shared test configuration."""

import warnings

import numpy as np
import pytest

try:
    from numba.core.errors import NumbaWarning

    warnings.filterwarnings("ignore", category=NumbaWarning)
except ImportError:
    pass


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
