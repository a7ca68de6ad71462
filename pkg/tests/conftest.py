import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from phycov.estimators import as_series


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


def random_instance(rng, n_x=None, n_y=None, max_n=60, sync=False):
    """A small random nonsynchronous observation pair for oracle checks."""
    n_x = n_x or int(rng.integers(25, max_n + 1))
    n_y = n_x if sync else int(rng.integers(25, max_n + 1))
    sx = np.concatenate(([0.0], np.sort(rng.random(n_x - 1))))
    sy = sx.copy() if sync else np.concatenate(([0.0], np.sort(rng.random(n_y - 1))))
    b_n = 1.0 / n_x
    xs = as_series(sx, np.cumsum(rng.standard_normal(n_x)) * 0.01, b_n)
    ys = as_series(sy, np.cumsum(rng.standard_normal(n_y)) * 0.01, b_n)
    return xs, ys


def pytest_addoption(parser):
    parser.addoption("--full-scale", action="store_true", default=False,
                     help="run the full 5000-replication table reproduction")
