"""Utility functions of the achieved rate and their per-link tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import NONE, InvalidParameterError, NetworkInstance
from .region import DEFAULT_LOSS, feasibility_table, region_params

# Stand-in for U(0) = -inf; keeps message arithmetic finite.
SENTINEL = -1e9
RATE_FLOOR = 1e-3

SUM_RATE = "sumrate"
LOG = "log"
BETA_FAIR = "betafair"
WEIGHTED = "weighted"


@dataclass(frozen=True)
class UtilityKind:
    tag: str
    beta: float = 1.0
    weight: float = 1.0

    def __post_init__(self):
        if self.tag not in (SUM_RATE, LOG, BETA_FAIR, WEIGHTED):
            raise InvalidParameterError(f"unknown utility {self.tag!r}")
        if self.tag == BETA_FAIR and not self.beta > 0:
            raise InvalidParameterError("beta must be > 0")
        if self.tag == WEIGHTED and not (math.isfinite(self.weight) and self.weight >= 0):
            raise InvalidParameterError("weight must be finite and >= 0")

    @classmethod
    def sum_rate(cls):
        return cls(SUM_RATE)

    @classmethod
    def log(cls):
        return cls(LOG)

    @classmethod
    def beta_fair(cls, beta: float):
        return cls(BETA_FAIR, beta=beta)

    @classmethod
    def weighted(cls, weight: float):
        return cls(WEIGHTED, weight=weight)

    @property
    def has_sentinel(self) -> bool:
        return self.tag in (LOG, BETA_FAIR)


def parse_utility(name: str, beta: float = 1.0) -> UtilityKind:
    name = name.lower().replace("-", "").replace("_", "")
    aliases = {"sumrate": SUM_RATE, "log": LOG, "pf": LOG, "betafair": BETA_FAIR}
    if name not in aliases:
        raise InvalidParameterError(f"unknown utility {name!r}")
    return UtilityKind(aliases[name], beta=beta)


def static_utility(kind: UtilityKind, R):
    """U(R) for scalars or arrays; the zero-rate value of LOG and BETA_FAIR is
    replaced by :data:`SENTINEL`."""
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise InvalidParameterError("rates must be >= 0")
    if kind.tag == SUM_RATE:
        out = R.copy()
    elif kind.tag == WEIGHTED:
        out = kind.weight * R
    else:
        pos = R > 0
        safe = np.where(pos, R, 1.0)
        if kind.tag == LOG:
            val = np.log(safe)
        else:
            val = -kind.beta * safe ** (-kind.beta)
        out = np.where(pos, val, SENTINEL)
    return float(out) if out.ndim == 0 else out


def marginal_weight(kind: UtilityKind, avg_rate: float) -> float:
    """dU/dR at the (floored) average rate."""
    r = max(float(avg_rate), RATE_FLOOR)
    if kind.tag == SUM_RATE:
        return 1.0
    if kind.tag == WEIGHTED:
        return kind.weight
    if kind.tag == LOG:
        return 1.0 / r
    return kind.beta ** 2 * r ** (-kind.beta - 1.0)


def update_avg_rate(avg_rate, rate, alpha: float):
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameterError("alpha must lie in (0, 1]")
    return (1.0 - alpha) * avg_rate + alpha * rate


@dataclass(frozen=True)
class UtilityTable:
    """``values[a, b] = f_i(grid[a], grid[b])``; a vector when the link has no
    dominant interferer."""

    link: int
    values: np.ndarray

    @property
    def pairwise(self) -> bool:
        return self.values.ndim == 2

    def __call__(self, a: int, b: int = 0) -> float:
        return float(self.values[a, b] if self.pairwise else self.values[a])


def _kinds_for(inst: NetworkInstance, kind) -> list[UtilityKind]:
    if isinstance(kind, UtilityKind):
        return [kind] * inst.n
    kinds = list(kind)
    if len(kinds) != inst.n:
        raise InvalidParameterError("need one utility kind per link")
    return kinds


def achieved_rate_tables(inst: NetworkInstance, loss_factor: float = DEFAULT_LOSS) -> list[np.ndarray]:
    """Per link, the rate actually delivered for every (own, interferer) grid pair."""
    pts = inst.grid.points
    out = []
    for i in range(inst.n):
        ok = feasibility_table(region_params(inst, i, loss_factor), pts)
        out.append(np.where(ok, pts[:, None], 0.0))
    return out


def build_utility_tables(inst: NetworkInstance, kind: UtilityKind | Sequence[UtilityKind],
                         loss_factor: float = DEFAULT_LOSS, achieved=None) -> list[UtilityTable]:
    """``achieved`` may pass in precomputed :func:`achieved_rate_tables`."""
    if achieved is None:
        achieved = achieved_rate_tables(inst, loss_factor)
    tables = []
    for i, k in enumerate(_kinds_for(inst, kind)):
        vals = static_utility(k, achieved[i])
        if inst.sigma[i] == NONE:
            vals = vals[:, 0].copy()
        vals.setflags(write=False)
        tables.append(UtilityTable(i, vals))
    return tables


def stack_tables(tables: Sequence[UtilityTable], count: int) -> np.ndarray:
    """``(n, K, K)`` array; vector tables are repeated along the interferer axis."""
    out = np.empty((len(tables), count, count))
    for t in tables:
        out[t.link] = t.values if t.pairwise else t.values[:, None]
    return out


def link_utilities(tables: Sequence[UtilityTable], sigma, x) -> np.ndarray:
    """Per-link ``f_i(x_i, x_sigma(i))`` for grid-index vector ``x``."""
    x = np.asarray(x, dtype=np.int64)
    out = np.empty(len(tables))
    for t in tables:
        j = int(sigma[t.link])
        out[t.link] = t(x[t.link], x[j] if j != NONE else 0)
    return out


def total_utility(tables: Sequence[UtilityTable], sigma, x) -> float:
    return math.fsum(link_utilities(tables, sigma, x))


def utility_gap(tables: Sequence[UtilityTable], sigma, x_ref, x) -> float:
    """``F(x_ref) - F(x)`` rounded once, so sentinel terms cancel exactly."""
    a = link_utilities(tables, sigma, x_ref)
    b = link_utilities(tables, sigma, x)
    return math.fsum(np.concatenate((a, -b)))
