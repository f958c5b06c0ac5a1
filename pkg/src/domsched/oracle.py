"""Exhaustive search over the joint rate grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, maxsum
from .maxsum import Problem
from .region import project_indices
from .utility import SENTINEL, total_utility, utility_gap

MAX_POINTS = 10 ** 8


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    x: np.ndarray
    utility: float
    evaluated: int
    dead_links: int = 0


def exhaustive_optimum(problem: Problem, max_points: int = MAX_POINTS) -> OracleResult:
    """Maximise the sum utility by visiting every point of ``grid ** n``.

    Sentinel (zero-rate) terms are counted separately from the finite part so
    that comparisons do not lose precision against the large sentinel value.
    Ties go to the lexicographically smallest index vector.
    """
    n, K = problem.n, problem.K
    if K ** n > max_points:
        raise InstanceTooLargeError(f"{K}^{n} joint points exceed the limit of {max_points}")
    dead = problem.stacked == SENTINEL
    finite = np.where(dead, 0.0, problem.stacked)
    partner = np.where(problem.has_int, problem.sigma, np.arange(n))
    x, dead_links, _, evaluated = kernels.exhaustive_search(finite, dead.astype(np.int64), partner)
    return OracleResult(x, total_utility(problem.tables, problem.sigma, x), evaluated, dead_links)


@dataclass(frozen=True)
class Comparison:
    utility_bp: float
    utility_opt: float
    gap: float
    converged: bool
    iterations: int
    x_bp: np.ndarray
    x_opt: np.ndarray
    tie_resolution: str = "none"


def compare_bp_to_oracle(problem: Problem, max_iters: int = 200, damping: float = 0.5,
                         tol: float = 1e-6, oracle: OracleResult | None = None) -> Comparison:
    """Run BP, project its decisions, and score them against the exact optimum."""
    if oracle is None:
        oracle = exhaustive_optimum(problem)
    res = maxsum.run(problem, max_iters=max_iters, damping=damping, tol=tol)
    x_bp = project_indices(problem.inst, res.decisions)
    return Comparison(
        utility_bp=total_utility(problem.tables, problem.sigma, x_bp),
        utility_opt=oracle.utility,
        gap=utility_gap(problem.tables, problem.sigma, oracle.x, x_bp),
        converged=res.converged,
        iterations=res.iterations_used,
        x_bp=x_bp,
        x_opt=oracle.x,
        tie_resolution=res.tie_resolution,
    )
