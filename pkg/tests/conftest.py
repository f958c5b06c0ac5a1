import numpy as np
import pytest

from domsched.network import NONE, build_instance, make_rate_grid


def instance_from_rx(rx, noise, sigma, grid=None):
    """Instance with unit powers whose received-power matrix is ``rx``."""
    rx = np.asarray(rx, dtype=float)
    n = rx.shape[0]
    return build_instance(rx, np.ones(n), noise, sigma, grid or make_rate_grid())


def symmetric_pair(rx_self=2.0, rx_int=2.0, noise=1.0, grid=None):
    """Two links in mutual interference with identical received powers."""
    rx = np.array([[rx_self, rx_int], [rx_int, rx_self]])
    return instance_from_rx(rx, noise, [1, 0], grid)


@pytest.fixture
def three_point_grid():
    from domsched.network import RateGrid
    return RateGrid(np.array([0.0, 0.5, 1.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


__all__ = ["NONE", "instance_from_rx", "symmetric_pair"]
