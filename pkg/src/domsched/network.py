"""Network instances, rate grids and dominant-interferer selection.

Link indices are 0-based throughout the library. ``NONE`` (-1) marks a
receiver without a dominant interferer. The JSON document format uses the
1-based convention with 0 meaning no interferer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NONE = -1


class InvalidParameterError(ValueError):
    """Raised when an argument is outside its documented domain."""


class InstanceError(ValueError):
    """Raised when network instance data are inconsistent."""


@dataclass(frozen=True)
class RateGrid:
    """Ordered set of attempted spectral efficiencies in bps/Hz."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidParameterError("a rate grid needs at least two points")
        if pts[0] != 0.0:
            raise InvalidParameterError("the first grid point must be 0")
        if np.any(np.diff(pts) <= 0):
            raise InvalidParameterError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return int(self.points.size)

    @property
    def r_max(self) -> float:
        return float(self.points[-1])

    def __len__(self):
        return self.count

    def __eq__(self, other):
        return isinstance(other, RateGrid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def floor_index(self, rate: float) -> int:
        """Index of the largest grid point not above ``rate`` (0 for negative rates)."""
        k = int(np.searchsorted(self.points, rate + 1e-12, side="right")) - 1
        return max(k, 0)


def make_rate_grid(count: int = 25, r_max: float = 5.0, r_min_pos: float | None = None) -> RateGrid:
    """Zero followed by ``count - 1`` geometrically spaced rates.

    Parameters
    ----------
    count : int
        Total number of points, including the silent rate 0.
    r_max : float
        Largest attempted rate (the maximum spectral efficiency).
    r_min_pos : float, optional
        Smallest positive rate. Defaults to 1% of ``r_max``.
    """
    if r_min_pos is None:
        r_min_pos = 0.01 * r_max
    if count < 2:
        raise InvalidParameterError("count must be >= 2")
    if not (r_max > 0 and r_min_pos > 0):
        raise InvalidParameterError("rates must be positive")
    if count == 2:
        if r_min_pos > r_max:
            raise InvalidParameterError("r_min_pos must not exceed r_max")
        return RateGrid(np.array([0.0, float(r_max)]))
    if not r_min_pos < r_max:
        raise InvalidParameterError("need 0 < r_min_pos < r_max")
    pos = np.geomspace(r_min_pos, r_max, count - 1)
    pos[-1] = r_max
    return RateGrid(np.concatenate(([0.0], pos)))


def select_dominant_interferers(gains, powers, noise=None, threshold_db: float = 20.0) -> np.ndarray:
    """Pick, for each receiver, the strongest non-serving transmitter.

    The received interference power ``gains[i, j] * powers[j]`` is maximised
    over ``j != i``; ties go to the lowest index. When ``noise`` is given, a
    receiver whose strongest interferer sits more than ``threshold_db`` below
    its noise power gets ``NONE``.
    """
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    n = gains.shape[0]
    if gains.shape != (n, n) or powers.shape != (n,):
        raise InstanceError("gains must be n x n and powers length n")
    rx = gains * powers[None, :]
    np.fill_diagonal(rx, -np.inf)
    sigma = np.full(n, NONE, dtype=np.int64)
    if n < 2:
        return sigma
    sigma[:] = np.argmax(rx, axis=1)
    if noise is not None:
        noise = np.broadcast_to(np.asarray(noise, dtype=float), (n,))
        floor = noise * 10.0 ** (-threshold_db / 10.0)
        strongest = rx[np.arange(n), sigma]
        sigma[strongest < floor] = NONE
    return sigma


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """One network drop. Treated as read-only once built."""

    gains: np.ndarray
    powers: np.ndarray
    noise: np.ndarray
    sigma: np.ndarray
    grid: RateGrid

    @property
    def n(self) -> int:
        return int(self.powers.size)

    def received_power(self) -> np.ndarray:
        """Matrix of ``G[i, j] * P[j]``."""
        return self.gains * self.powers[None, :]

    def victims(self, j: int) -> list[int]:
        """Receivers for which transmitter ``j`` is the dominant interferer."""
        return [int(i) for i in np.flatnonzero(self.sigma == j)]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gains": self.gains.ravel().tolist(),
            "powers": self.powers.tolist(),
            "noise": self.noise.tolist(),
            "sigma": [int(s) + 1 for s in self.sigma],
            "grid": self.grid.points.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkInstance":
        n = int(doc["n"])
        gains = np.asarray(doc["gains"], dtype=float)
        if gains.size != n * n:
            raise InstanceError(f"expected {n * n} gain entries, got {gains.size}")
        sigma = np.asarray(doc["sigma"], dtype=np.int64) - 1
        return build_instance(gains.reshape(n, n), doc["powers"], doc["noise"], sigma,
                              RateGrid(np.asarray(doc["grid"], dtype=float)))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "NetworkInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def build_instance(gains, powers, noise, sigma, grid: RateGrid) -> NetworkInstance:
    """Validate inputs and return an immutable :class:`NetworkInstance`."""
    gains = _frozen(gains)
    powers = _frozen(powers).reshape(-1)
    n = powers.size
    noise = _frozen(np.broadcast_to(np.asarray(noise, dtype=float), (n,)))
    if gains.shape != (n, n):
        raise InstanceError(f"gains has shape {gains.shape}, expected ({n}, {n})")
    sigma = np.array(sigma, dtype=np.int64).reshape(-1)
    if sigma.size != n:
        raise InstanceError(f"sigma has length {sigma.size}, expected {n}")
    for name, arr in (("gains", gains), ("powers", powers), ("noise", noise)):
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise InstanceError(f"{name} must be strictly positive and finite")
    for i, s in enumerate(sigma):
        if s == i:
            raise InstanceError(f"link {i} cannot be its own dominant interferer")
        if s != NONE and not 0 <= s < n:
            raise InstanceError(f"sigma[{i}] = {s} is out of range")
    if not isinstance(grid, RateGrid):
        raise InstanceError("grid must be a RateGrid")
    sigma.setflags(write=False)
    return NetworkInstance(gains, powers, noise, sigma, grid)


def schedule_is_valid(inst: NetworkInstance, x) -> bool:
    x = np.asarray(x)
    return x.shape == (inst.n,) and bool(np.all((x >= 0) & (x < inst.grid.count)))
