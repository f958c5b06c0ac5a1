"""Reuse-1 and interference-cancellation rate regions.

Every SINR is divided by ``loss_factor`` (2.0, i.e. 3 dB off Shannon)
before it enters a ``log2(1 + .)`` bound, including the sum-rate bound of
the MAC pentagon.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NONE, NetworkInstance

TOL = 1e-12
DEFAULT_LOSS = 2.0


class NoDominantInterfererError(ValueError):
    pass


@dataclass(frozen=True)
class LinkRegionParams:
    rho_reuse1: float
    rho_serv: float
    rho_int: float | None = None
    loss_factor: float = DEFAULT_LOSS

    @property
    def cap_reuse1(self) -> float:
        return float(np.log2(1.0 + self.rho_reuse1 / self.loss_factor))

    @property
    def cap_serv(self) -> float:
        return float(np.log2(1.0 + self.rho_serv / self.loss_factor))

    @property
    def cap_int(self) -> float:
        return float(np.log2(1.0 + self.rho_int / self.loss_factor))

    @property
    def cap_sum(self) -> float:
        return float(np.log2(1.0 + (self.rho_serv + self.rho_int) / self.loss_factor))


def sinr_reuse1(inst: NetworkInstance, i: int) -> float:
    """SINR of link ``i`` with all other transmitters treated as noise."""
    rx = inst.received_power()[i]
    interference = rx.sum() - rx[i]
    return float(rx[i] / (interference + inst.noise[i]))


def sinr_joint(inst: NetworkInstance, i: int, ell: int) -> float:
    """SINR of transmitter ``ell`` at receiver ``i`` with the dominant
    interferer removed from the denominator (joint detection)."""
    j = int(inst.sigma[i])
    if j == NONE:
        raise NoDominantInterfererError(f"link {i} has no dominant interferer")
    if ell not in (i, j):
        raise ValueError(f"ell must be {i} or {j}, got {ell}")
    rx = inst.received_power()[i]
    rest = rx.sum() - rx[i] - rx[j]
    return float(rx[ell] / (rest + inst.noise[i]))


def region_params(inst: NetworkInstance, i: int, loss_factor: float = DEFAULT_LOSS) -> LinkRegionParams:
    rho = sinr_reuse1(inst, i)
    if inst.sigma[i] == NONE:
        return LinkRegionParams(rho, rho, None, loss_factor)
    return LinkRegionParams(rho, sinr_joint(inst, i, i),
                            sinr_joint(inst, i, int(inst.sigma[i])), loss_factor)


def is_feasible(params: LinkRegionParams, x_i: float, x_j: float = 0.0) -> bool:
    """Whether the pair (own rate, interferer rate) is decodable at the receiver."""
    if x_i <= params.cap_reuse1 + TOL:
        return True
    if params.rho_int is None:
        return False
    return (x_i <= params.cap_serv + TOL
            and x_j <= params.cap_int + TOL
            and x_i + x_j <= params.cap_sum + TOL)


def achieved_rate(params: LinkRegionParams, x_i: float, x_j: float = 0.0) -> float:
    return float(x_i) if is_feasible(params, x_i, x_j) else 0.0


def feasibility_table(params: LinkRegionParams, points: np.ndarray) -> np.ndarray:
    """Boolean matrix ``M[a, b] = is_feasible(params, points[a], points[b])``."""
    xi = points[:, None]
    xj = points[None, :]
    ok = np.broadcast_to(xi <= params.cap_reuse1 + TOL, (points.size, points.size))
    if params.rho_int is None:
        return ok.copy()
    ic = ((xi <= params.cap_serv + TOL) & (xj <= params.cap_int + TOL)
          & (xi + xj <= params.cap_sum + TOL))
    return ok | ic


def max_feasible_index(params: LinkRegionParams, points: np.ndarray, upto: int, x_j: float) -> int:
    """Largest grid index ``k <= upto`` with ``(points[k], x_j)`` feasible."""
    for k in range(upto, -1, -1):
        if is_feasible(params, points[k], x_j):
            return k
    return 0


def project_indices(inst: NetworkInstance, xhat, loss_factor: float = DEFAULT_LOSS) -> np.ndarray:
    """Grid indices of the rates returned by :func:`project_feasible`."""
    xhat = np.asarray(xhat, dtype=np.int64)
    pts = inst.grid.points
    out = np.zeros(inst.n, dtype=np.int64)
    for i in range(inst.n):
        params = region_params(inst, i, loss_factor)
        j = int(inst.sigma[i])
        x_j = pts[xhat[j]] if j != NONE else 0.0
        out[i] = max_feasible_index(params, pts, int(xhat[i]), x_j)
    return out


def project_feasible(inst: NetworkInstance, xhat, loss_factor: float = DEFAULT_LOSS) -> np.ndarray:
    """Turn attempted grid indices into achieved rates that are jointly feasible.

    Each receiver backs off to the largest grid rate that is decodable
    against its interferer's attempted (not projected) rate, so the step
    needs local information only.
    """
    return inst.grid.points[project_indices(inst, xhat, loss_factor)]
