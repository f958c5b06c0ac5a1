"""Multi-drop campaigns, the slotted dynamic scheduler, and result files.

Drop ``d`` of a campaign with master seed ``s`` draws its randomness from
``np.random.SeedSequence([s, d])``, so drops can run in any order or in
parallel and still give the same numbers.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import maxsum
from .maxsum import Problem
from .network import InvalidParameterError, NetworkInstance, make_rate_grid
from .oracle import MAX_POINTS, InstanceTooLargeError, exhaustive_optimum
from .region import DEFAULT_LOSS, project_indices, region_params
from .scenarios import CONFIGS, GENERATORS, SYNTHETIC, config_from_dict
from .utility import (RATE_FLOOR, SENTINEL, UtilityKind, achieved_rate_tables, build_utility_tables, link_utilities,
                      marginal_weight, parse_utility, static_utility, update_avg_rate)

log = logging.getLogger(__name__)

REUSE1 = "reuse1"
CONVERGED = "bp_conv"
ORACLE = "oracle"
CDF_HEADER = "method,rate_bps_hz,cum_prob"


def bp_method(k: int) -> str:
    return f"bp_k{k}"


@dataclass
class ExperimentConfig:
    """Campaign description.

    ``damping`` applies to the fixed-iteration runs listed in ``bp_iters``;
    the converged reference uses ``converged_damping`` and ``max_iters``.
    ``scenario_params`` overrides fields of the scenario's own config.
    """

    scenario: str = "apartment"
    drops: int = 100
    utility: str = "log"
    beta: float = 1.0
    bp_iters: tuple = (1, 4)
    damping: float = 1.0
    converged_damping: float = 0.5
    tol: float = 1e-6
    max_iters: int = 200
    oracle: bool = False
    seed: int = 0
    grid_count: int = 25
    r_max: float = 5.0
    loss_factor: float = DEFAULT_LOSS
    scenario_params: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.scenario not in GENERATORS:
            raise InvalidParameterError(f"unknown scenario {self.scenario!r}")
        if self.drops < 1:
            raise InvalidParameterError("drops must be >= 1")
        self.bp_iters = tuple(sorted({int(k) for k in self.bp_iters}))
        if any(k < 1 for k in self.bp_iters):
            raise InvalidParameterError("bp iteration counts must be >= 1")
        for g in (self.damping, self.converged_damping):
            if not 0.0 < g <= 1.0:
                raise InvalidParameterError("damping must lie in (0, 1]")
        if not self.tol > 0 or self.max_iters < 1 or self.workers < 1:
            raise InvalidParameterError("tol > 0, max_iters >= 1 and workers >= 1 required")
        parse_utility(self.utility, self.beta)
        config_from_dict(self.scenario_params, self.scenario)

    @property
    def kind(self) -> UtilityKind:
        return parse_utility(self.utility, self.beta)

    @property
    def methods(self) -> list[str]:
        out = [REUSE1] + [bp_method(k) for k in self.bp_iters] + [CONVERGED]
        return out + [ORACLE] if self.oracle else out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bp_iters"] = list(self.bp_iters)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        return cls(**doc)


@dataclass
class DropResult:
    drop: int
    n: int
    sigma: list
    rates: dict
    utilities: dict
    dead_links: dict
    converged: bool
    iterations: int
    tie_resolution: str
    decisions: dict = field(default_factory=dict)
    oracle_skipped: bool = False
    instance: NetworkInstance | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "drop": self.drop,
            "n": self.n,
            "sigma": [s + 1 for s in self.sigma],
            "rates": {m: [float(r) for r in v] for m, v in self.rates.items()},
            "utilities": self.utilities,
            "dead_links": self.dead_links,
            "converged": self.converged,
            "iterations": self.iterations,
            "tie_resolution": self.tie_resolution,
            "decisions": {m: [int(v) for v in x] for m, x in self.decisions.items()},
            "oracle_skipped": self.oracle_skipped,
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    drops: list

    def samples(self, method: str) -> np.ndarray:
        """Per-link rates of ``method`` pooled over all drops."""
        parts = [np.asarray(d.rates[method]) for d in self.drops if method in d.rates]
        return np.concatenate(parts) if parts else np.empty(0)

    def cdf(self, method: str):
        return empirical_cdf(self.samples(method))

    def percentile(self, method: str, q: float) -> float:
        return nearest_rank(self.samples(method), q)

    def summary(self) -> dict:
        out = {"drops": len(self.drops),
               "converged": sum(d.converged for d in self.drops),
               "tie_resolution": {}}
        for d in self.drops:
            out["tie_resolution"][d.tie_resolution] = out["tie_resolution"].get(d.tie_resolution, 0) + 1
        pct = {}
        for m in self.config.methods:
            s = self.samples(m)
            if s.size:
                pct[m] = {"p10": nearest_rank(s, 0.1), "p50": nearest_rank(s, 0.5)}
        out["percentiles"] = pct
        return out


def empirical_cdf(samples):
    """Sorted samples and their cumulative probabilities ``k / N``."""
    x = np.sort(np.asarray(samples, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def nearest_rank(samples, q: float) -> float:
    """Smallest sample whose empirical CDF reaches ``q``; ``q`` in (0, 1]."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("no samples")
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    k = max(math.ceil(round(q * x.size, 9)), 1)
    return float(x[k - 1])


def drop_seed(master: int, drop: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), int(drop)])


def run_reuse1_baseline(inst: NetworkInstance, loss_factor: float = DEFAULT_LOSS) -> np.ndarray:
    """Largest grid rate below ``log2(1 + rho / L)`` for every link."""
    pts = inst.grid.points
    return np.array([pts[inst.grid.floor_index(region_params(inst, i, loss_factor).cap_reuse1)]
                     for i in range(inst.n)])


def _score(tables, sigma, x):
    vals = link_utilities(tables, sigma, x)
    dead = vals == SENTINEL
    return math.fsum(vals), int(dead.sum())


def generate_instance(cfg: ExperimentConfig, drop: int):
    scen = config_from_dict(cfg.scenario_params, cfg.scenario)
    grid = make_rate_grid(cfg.grid_count, cfg.r_max)
    return GENERATORS[cfg.scenario](scen, drop_seed(cfg.seed, drop), grid)


def run_drop(cfg: ExperimentConfig, drop: int) -> DropResult:
    inst, _ = generate_instance(cfg, drop)
    kind = cfg.kind
    tables = build_utility_tables(inst, kind, cfg.loss_factor)
    problem = Problem(inst, tables)
    pts = inst.grid.points
    rates, utils, dead, raw = {}, {}, {}, {}

    r1 = run_reuse1_baseline(inst, cfg.loss_factor)
    u1 = np.atleast_1d(static_utility(kind, r1))
    rates[REUSE1] = r1
    utils[REUSE1] = math.fsum(u1)
    dead[REUSE1] = int((u1 == SENTINEL).sum())

    for k in cfg.bp_iters:
        res = maxsum.run(problem, max_iters=k, damping=cfg.damping, tol=cfg.tol)
        raw[bp_method(k)] = res.decisions
        x = project_indices(inst, res.decisions, cfg.loss_factor)
        rates[bp_method(k)] = pts[x]
        utils[bp_method(k)], dead[bp_method(k)] = _score(tables, inst.sigma, x)

    conv = maxsum.run(problem, max_iters=cfg.max_iters, damping=cfg.converged_damping, tol=cfg.tol)
    raw[CONVERGED] = conv.decisions
    x = project_indices(inst, conv.decisions, cfg.loss_factor)
    rates[CONVERGED] = pts[x]
    utils[CONVERGED], dead[CONVERGED] = _score(tables, inst.sigma, x)

    skipped = False
    if cfg.oracle:
        try:
            opt = exhaustive_optimum(problem, MAX_POINTS)
        except InstanceTooLargeError as exc:
            log.warning("drop %d: oracle skipped (%s)", drop, exc)
            skipped = True
        else:
            rates[ORACLE] = pts[opt.x]
            utils[ORACLE], dead[ORACLE] = _score(tables, inst.sigma, opt.x)

    return DropResult(drop, inst.n, [int(s) for s in inst.sigma], rates, utils, dead,
                      conv.converged, conv.iterations_used, conv.tie_resolution, raw, skipped, inst)


def _run_drop_args(args):
    return run_drop(*args)


def run_static_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Every drop: reuse-1 baseline, projected BP at each iteration count,
    converged BP and optionally the exhaustive oracle."""
    jobs = [(cfg, d) for d in range(cfg.drops)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            drops = list(pool.map(_run_drop_args, jobs, chunksize=max(1, cfg.drops // (4 * cfg.workers))))
    else:
        drops = [run_drop(c, d) for c, d in jobs]
    return ExperimentReport(cfg, drops)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_cdf(report: ExperimentReport | None, path) -> None:
    lines = [CDF_HEADER]
    if report is not None:
        for m in report.config.methods:
            x, p = report.cdf(m)
            lines += [f"{m},{_fmt(a)},{_fmt(b)}" for a, b in zip(x, p)]
    Path(path).write_text("\n".join(lines) + "\n")


def emit_results(report: ExperimentReport | None, out_dir, dump_instances: bool = False) -> dict:
    """Write ``cdf.csv``, ``report.json`` and optionally ``instances/drop_NNNN.json``.

    Output depends only on the report contents, never on timing or worker
    count. Returns the written paths by role.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"cdf": out / "cdf.csv", "report": out / "report.json"}
        write_cdf(report, paths["cdf"])
        if report is None:
            doc = {"config": None, "drops": [], "summary": {"drops": 0}}
        else:
            cfg = report.config.to_dict()
            cfg.pop("workers")
            doc = {
                "config": cfg,
                "seeds": {"master": report.config.seed,
                          "per_drop": "SeedSequence([master, drop])"},
                "summary": report.summary(),
                "drops": [d.to_dict() for d in report.drops],
            }
        paths["report"].write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        if dump_instances and report is not None:
            inst_dir = out / "instances"
            inst_dir.mkdir(exist_ok=True)
            for d in report.drops:
                if d.instance is not None:
                    d.instance.save(inst_dir / f"drop_{d.drop:04d}.json")
            paths["instances"] = inst_dir
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return paths


@dataclass
class DynamicResult:
    """``avg[t]`` is the average rate entering slot ``t``; ``avg[-1]`` the final one."""

    avg: np.ndarray
    rates: np.ndarray
    weights: np.ndarray
    decisions: np.ndarray
    final_utility: float


def run_dynamic_experiment(inst: NetworkInstance, slots: int, alpha: float,
                           kind: UtilityKind | None = None, init_avg=RATE_FLOOR, max_iters: int = 200,
                           damping: float = 0.5, tol: float = 1e-6,
                           loss_factor: float = DEFAULT_LOSS) -> DynamicResult:
    """Slotted scheduler that re-runs BP on weighted sum-rate tables.

    Each slot the weights are the marginal utilities at the current
    average rates; the projected BP schedule sets the achieved rates, which
    then feed the exponential average.
    """
    if slots < 1:
        raise InvalidParameterError("slots must be >= 1")
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameterError("alpha must lie in (0, 1]")
    kind = kind or UtilityKind.log()
    n = inst.n
    pts = inst.grid.points
    avg = np.empty((slots + 1, n))
    avg[0] = np.broadcast_to(np.asarray(init_avg, dtype=float), (n,))
    rates = np.empty((slots, n))
    weights = np.empty((slots, n))
    decisions = np.empty((slots, n), dtype=np.int64)
    achieved = achieved_rate_tables(inst, loss_factor)
    for t in range(slots):
        w = np.array([marginal_weight(kind, a) for a in avg[t]])
        tables = build_utility_tables(inst, [UtilityKind.weighted(float(v)) for v in w],
                                      loss_factor, achieved)
        res = maxsum.run(Problem(inst, tables), max_iters=max_iters, damping=damping, tol=tol)
        x = project_indices(inst, res.decisions, loss_factor)
        weights[t] = w
        decisions[t] = x
        rates[t] = pts[x]
        avg[t + 1] = update_avg_rate(avg[t], rates[t], alpha)
    final = math.fsum(np.atleast_1d(static_utility(kind, avg[-1])))
    return DynamicResult(avg, rates, weights, decisions, final)


@dataclass
class TheoremCheck:
    instances: int
    converged: int
    violations: list
    max_gap: float
    tie_resolution: dict

    @property
    def converged_fraction(self) -> float:
        return self.converged / self.instances if self.instances else 0.0


def certify_theorem(instances: int, n_choices=(2, 3, 4), grid_choices=(5, 10, 25),
                    utilities=("log", "sumrate"), seed: int = 0, span_db: float = 40.0,
                    damping: float = 0.5, tol: float = 1e-6, max_iters: int = 200) -> TheoremCheck:
    """Compare converged, projected BP with the exhaustive optimum on random
    synthetic instances. Instance ``m`` cycles through utilities and draws
    its size and grid from ``SeedSequence([seed, m])``."""
    from .scenarios import SyntheticConfig, gen_synthetic_drop
    from .oracle import compare_bp_to_oracle

    n_choices, grid_choices = tuple(n_choices), tuple(grid_choices)
    converged, violations, max_gap, ties = 0, [], 0.0, {}
    for m in range(instances):
        rng = np.random.default_rng(drop_seed(seed, m))
        n = int(rng.choice(n_choices))
        K = int(rng.choice(grid_choices))
        kind = parse_utility(utilities[m % len(utilities)])
        inst, _ = gen_synthetic_drop(SyntheticConfig(n=n, span_db=span_db), rng, make_rate_grid(K))
        problem = Problem(inst, build_utility_tables(inst, kind))
        cmp = compare_bp_to_oracle(problem, max_iters, damping, tol)
        ties[cmp.tie_resolution] = ties.get(cmp.tie_resolution, 0) + 1
        if not cmp.converged:
            continue
        converged += 1
        gap = abs(cmp.gap)
        max_gap = max(max_gap, gap)
        if gap > 1e-9:
            violations.append({"instance": m, "n": n, "grid": K, "utility": kind.tag,
                               "gap": cmp.gap, "x_bp": cmp.x_bp.tolist(), "x_opt": cmp.x_opt.tolist()})
    return TheoremCheck(instances, converged, violations, max_gap, ties)


def random_sigma(rng: np.random.Generator, n: int, none_fraction: float = 0.0) -> np.ndarray:
    """Uniform dominant-interferer map; each link has no interferer with
    probability ``none_fraction``."""
    s = rng.integers(0, n - 1, size=n)
    s = s + (s >= np.arange(n))
    if none_fraction > 0:
        s[rng.random(n) < none_fraction] = -1
    return s


def certify_graph(trials: int, n: int, seed: int = 0, none_fraction: float = 0.2) -> dict:
    """Single-cycle sweep over total and partial random sigma maps.

    Total maps must give exactly one cycle per component, partial maps at
    most one.
    """
    from .graph import build_graph, component_cycle_counts

    rng = np.random.default_rng(seed)
    out = {"trials": trials, "n": n, "violations": []}
    for variant, frac in (("total", 0.0), ("partial", none_fraction)):
        for t in range(trials):
            sigma = random_sigma(rng, n, frac)
            for comp in component_cycle_counts(build_graph(sigma)):
                bad = comp.cycle_count > 1 or (frac == 0.0 and comp.cycle_count != 1)
                if bad:
                    out["violations"].append({"variant": variant, "trial": t,
                                              "sigma": [int(v) + 1 for v in sigma],
                                              "component": [v + 1 for v in comp.vertices],
                                              "cycles": comp.cycle_count})
    return out


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


__all__ = [
    "CONFIGS", "SYNTHETIC", "ExperimentConfig", "DropResult", "ExperimentReport", "DynamicResult",
    "run_reuse1_baseline", "run_static_experiment", "run_dynamic_experiment", "emit_results",
    "empirical_cdf", "nearest_rank", "drop_seed", "bp_method", "certify_theorem", "certify_graph",
    "random_sigma",
]
