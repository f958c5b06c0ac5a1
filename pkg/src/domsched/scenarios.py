"""Random network drops: femtocell apartment block, road with handover drag,
and small synthetic networks for exact-oracle checks.

Distances are in metres, powers in mW, gains linear.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .network import NetworkInstance, RateGrid, build_instance, make_rate_grid, select_dominant_interferers

APARTMENT = "apartment"
ROAD = "road"
SYNTHETIC = "synthetic"

THERMAL_DBM_HZ = -174.0
MIN_DISTANCE = 1.0


def noise_mw(bandwidth_hz: float, noise_figure_db: float) -> float:
    return 10.0 ** ((THERMAL_DBM_HZ + 10.0 * np.log10(bandwidth_hz) + noise_figure_db) / 10.0)


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


@dataclass
class ApartmentConfig:
    grid_rows: int = 4
    grid_cols: int = 4
    apartment_size: float = 10.0
    active_links: int = 10
    bandwidth_hz: float = 5e6
    wall_loss_db: float = 10.0
    shadow_std_db: float = 10.0
    tx_power_dbm: float = 0.0
    noise_figure_db: float = 4.0
    sigma_threshold_db: float = 20.0

    def __post_init__(self):
        if not 1 <= self.active_links <= self.grid_rows * self.grid_cols:
            raise ValueError("active_links must fit in the apartment grid")


@dataclass
class RoadConfig:
    n_tx: int = 10
    n_rx: int = 10
    road_width: float = 10.0
    period: float = 50.0
    apartment_width: float = 10.0
    apartment_length: float = 20.0
    bandwidth_hz: float = 5e6
    wall_loss_db: float = 0.0
    shadow_std_db: float = 10.0
    tx_power_dbm: float = 0.0
    noise_figure_db: float = 4.0
    v_min: float = 15.0
    v_max: float = 25.0
    drag_max_s: float = 1.0
    sigma_threshold_db: float = 20.0

    def __post_init__(self):
        if self.n_rx > self.n_tx:
            raise ValueError("each mobile needs its own femto: n_rx <= n_tx")
        if self.n_tx % 2:
            raise ValueError("femtos are split evenly over both sides of the road")


@dataclass
class SyntheticConfig:
    n: int = 3
    span_db: float = 40.0
    noise: float = 1e-3
    sigma_threshold_db: float = 20.0


CONFIGS = {APARTMENT: ApartmentConfig, ROAD: RoadConfig, SYNTHETIC: SyntheticConfig}


def load_config(path, scenario: str):
    """Read scenario parameters from a JSON object; missing keys keep defaults."""
    doc = json.loads(Path(path).read_text())
    return config_from_dict(doc, scenario)


def config_from_dict(doc: dict, scenario: str):
    cls = CONFIGS[scenario]
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown {scenario} config keys: {sorted(unknown)}")
    return cls(**doc)


def path_loss_db(model: str, distance, walls=0, wall_loss_db: float | None = None):
    """Distance-dependent loss plus ``walls * wall_loss_db``; distance clamped to 1 m."""
    R = np.maximum(np.asarray(distance, dtype=float), MIN_DISTANCE)
    if model == APARTMENT:
        base = 38.46 + 20.0 * np.log10(R) + 0.7 * R
        per_wall = 10.0 if wall_loss_db is None else wall_loss_db
    elif model == ROAD:
        base = 10.0 + 37.0 * np.log10(R)
        per_wall = 0.0 if wall_loss_db is None else wall_loss_db
    else:
        raise ValueError(f"unknown path loss model {model!r}")
    return base + np.asarray(walls) * per_wall


@dataclass
class Geometry:
    """Placement record of one drop, exportable for plotting."""

    scenario: str
    tx_pos: np.ndarray
    rx_pos: np.ndarray
    sigma: np.ndarray
    apartments: np.ndarray | None = None
    rx_start: np.ndarray | None = None
    serving: np.ndarray | None = None
    displacement: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        out["sigma"] = [int(s) + 1 for s in self.sigma]
        return out


def walls_between(p, q, size: float):
    """Interior apartment boundaries crossed by the segment from ``p`` to ``q``."""
    cp = np.floor(np.asarray(p) / size)
    cq = np.floor(np.asarray(q) / size)
    return np.abs(cp - cq).sum(axis=-1)


def gen_apartment_drop(cfg: ApartmentConfig | None = None, seed=0,
                       grid: RateGrid | None = None) -> tuple[NetworkInstance, Geometry]:
    """Closed-access femtocells in a block of apartments; one link per active apartment."""
    cfg = cfg or ApartmentConfig()
    grid = grid or make_rate_grid()
    rng = np.random.default_rng(seed)
    n, s = cfg.active_links, cfg.apartment_size
    apts = np.sort(rng.choice(cfg.grid_rows * cfg.grid_cols, size=n, replace=False))
    row, col = np.divmod(apts, cfg.grid_cols)
    origin = np.stack([col * s, row * s], axis=1).astype(float)
    bs = origin + rng.uniform(0.0, s, size=(n, 2))
    ue = origin + rng.uniform(0.0, s, size=(n, 2))
    shadow = rng.normal(0.0, cfg.shadow_std_db, size=(n, n))

    # rows: receivers (UE i), columns: transmitters (BS j)
    dist = np.linalg.norm(ue[:, None, :] - bs[None, :, :], axis=2)
    walls = walls_between(ue[:, None, :], bs[None, :, :], s)
    loss = path_loss_db(APARTMENT, dist, walls, cfg.wall_loss_db) - shadow
    gains = 10.0 ** (-loss / 10.0)
    powers = np.full(n, dbm_to_mw(cfg.tx_power_dbm))
    noise = np.full(n, noise_mw(cfg.bandwidth_hz, cfg.noise_figure_db))
    sigma = select_dominant_interferers(gains, powers, noise, cfg.sigma_threshold_db)
    inst = build_instance(gains, powers, noise, sigma, grid)
    geo = Geometry(APARTMENT, bs, ue, sigma, apartments=apts, serving=np.arange(n),
                   extra={"walls": walls.tolist()})
    return inst, geo


def _wrap(dx, period):
    return (dx + period / 2.0) % period - period / 2.0


def road_distances(rx, tx, period: float) -> np.ndarray:
    """Receiver-by-transmitter distances with minimum-image wrap along the road."""
    dx = _wrap(rx[:, None, 0] - tx[None, :, 0], period)
    dy = rx[:, None, 1] - tx[None, :, 1]
    return np.hypot(dx, dy)


def greedy_association(rx_power: np.ndarray) -> np.ndarray:
    """One femto per mobile: repeatedly attach the strongest remaining pair."""
    p = np.array(rx_power, dtype=float)
    n_rx = p.shape[0]
    serving = np.full(n_rx, -1, dtype=np.int64)
    for _ in range(n_rx):
        m, b = np.unravel_index(np.argmax(p), p.shape)
        serving[m] = b
        p[m, :] = -np.inf
        p[:, b] = -np.inf
    return serving


def gen_road_drop(cfg: RoadConfig | None = None, seed=0,
                  grid: RateGrid | None = None) -> tuple[NetworkInstance, Geometry]:
    """Open-access femtos along a periodic road; mobiles drift past their serving cell.

    Femtos sit in apartments on both sides of the road (half per side, one
    per apartment, uniform inside it). Mobiles start uniformly on the road,
    attach to the strongest free femto, then move forward by
    ``v * tau`` before the gains are frozen.
    """
    cfg = cfg or RoadConfig()
    grid = grid or make_rate_grid()
    rng = np.random.default_rng(seed)
    per_side = cfg.n_tx // 2
    slot = np.arange(per_side) * cfg.apartment_width
    x_top = slot + rng.uniform(0.0, cfg.apartment_width, per_side)
    y_top = cfg.road_width + rng.uniform(0.0, cfg.apartment_length, per_side)
    x_bot = slot + rng.uniform(0.0, cfg.apartment_width, per_side)
    y_bot = -rng.uniform(0.0, cfg.apartment_length, per_side)
    femto = np.concatenate([np.stack([x_top, y_top], 1), np.stack([x_bot, y_bot], 1)])

    start = np.stack([rng.uniform(0.0, cfg.period, cfg.n_rx),
                      rng.uniform(0.0, cfg.road_width, cfg.n_rx)], axis=1)
    shadow = rng.normal(0.0, cfg.shadow_std_db, size=(cfg.n_rx, cfg.n_tx))
    speed = rng.uniform(cfg.v_min, cfg.v_max, cfg.n_rx)
    drag = rng.uniform(0.0, cfg.drag_max_s, cfg.n_rx)

    def rx_dbm(pos):
        d = road_distances(pos, femto, cfg.period)
        return cfg.tx_power_dbm - path_loss_db(ROAD, d, 0, cfg.wall_loss_db) + shadow

    serving = greedy_association(rx_dbm(start))
    disp = speed * drag
    final = start.copy()
    final[:, 0] = (start[:, 0] + disp) % cfg.period

    gains_all = 10.0 ** (rx_dbm(final) / 10.0) / dbm_to_mw(cfg.tx_power_dbm)
    gains = gains_all[:, serving]
    n = cfg.n_rx
    powers = np.full(n, dbm_to_mw(cfg.tx_power_dbm))
    noise = np.full(n, noise_mw(cfg.bandwidth_hz, cfg.noise_figure_db))
    sigma = select_dominant_interferers(gains, powers, noise, cfg.sigma_threshold_db)
    inst = build_instance(gains, powers, noise, sigma, grid)
    geo = Geometry(ROAD, femto[serving], final, sigma, rx_start=start, serving=serving,
                   displacement=disp, extra={"femto_pos": femto.tolist(),
                                             "speed": speed.tolist(), "drag_s": drag.tolist()})
    return inst, geo


def gen_synthetic_drop(cfg: SyntheticConfig | None = None, seed=0,
                       grid: RateGrid | None = None) -> tuple[NetworkInstance, Geometry]:
    """Unit powers, gains log-uniform over ``span_db`` below 1."""
    cfg = cfg or SyntheticConfig()
    grid = grid or make_rate_grid()
    rng = np.random.default_rng(seed)
    n = cfg.n
    gains = 10.0 ** (-rng.uniform(0.0, cfg.span_db, size=(n, n)) / 10.0)
    powers = np.ones(n)
    noise = np.full(n, cfg.noise)
    sigma = select_dominant_interferers(gains, powers, noise, cfg.sigma_threshold_db)
    inst = build_instance(gains, powers, noise, sigma, grid)
    return inst, Geometry(SYNTHETIC, np.zeros((n, 2)), np.zeros((n, 2)), sigma)


GENERATORS = {APARTMENT: gen_apartment_drop, ROAD: gen_road_drop, SYNTHETIC: gen_synthetic_drop}
