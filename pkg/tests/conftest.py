import numpy as np
import pytest

from rcgeo import BLUE, RED, DomainSpec, PointSet


def random_coords(rng, n, delta, d):
    return rng.integers(0, delta, size=(n, d)).astype(np.int64)


def random_colored(rng, n, delta, d):
    coords = random_coords(rng, 2 * n, delta, d)
    colors = np.concatenate([np.full(n, RED, np.uint8),
                             np.full(n, BLUE, np.uint8)])
    return PointSet(coords, colors, DomainSpec(d, delta))


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
