"""Max-sum loopy belief propagation over the dominant-interferer factor graph.

Every receiver talks to two transmitters (its own and its dominant
interferer) and every transmitter to its own receiver plus its victims.
Message tables are indexed by rate-grid position. Updates are synchronous:
all receivers, then all transmitters. Tables are shifted so that their
maximum is 0 after every commit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from . import kernels
from .network import NONE, InvalidParameterError, NetworkInstance
from .utility import SENTINEL, UtilityTable, link_utilities, stack_tables


class Problem:
    """A network instance together with its per-link utility tables."""

    def __init__(self, inst: NetworkInstance, tables: Sequence[UtilityTable]):
        if len(tables) != inst.n:
            raise InvalidParameterError("need one utility table per link")
        self.inst = inst
        self.tables = list(tables)
        self.K = inst.grid.count
        self.stacked = stack_tables(self.tables, self.K)
        self.sigma = np.asarray(inst.sigma)
        self.has_int = self.sigma != NONE
        self.victims = np.flatnonzero(self.has_int)
        self.interferers = self.sigma[self.victims]

    @property
    def n(self) -> int:
        return self.inst.n

    def clamped(self, link: int, value: int) -> "Problem":
        """Copy whose factor ``link`` forbids every rate of TX ``link`` but ``value``."""
        tables = list(self.tables)
        vals = np.array(tables[link].values)
        mask = np.ones(vals.shape[0], dtype=bool)
        mask[value] = False
        vals[mask] = SENTINEL
        tables[link] = UtilityTable(link, vals)
        return Problem(self.inst, tables)


@dataclass
class MessageState:
    """All message tables, one row per link.

    ``tx_self[i]`` and ``tx_int[i]`` are the messages arriving at RX i from
    TX i and from TX sigma(i). ``rx_self[i]`` and ``rx_int[i]`` are the
    messages RX i sends back to TX i and to TX sigma(i). Rows of ``tx_int``
    and ``rx_int`` stay zero for links without a dominant interferer.
    """

    tx_self: np.ndarray
    tx_int: np.ndarray
    rx_self: np.ndarray
    rx_int: np.ndarray
    iteration: int = 0
    max_delta: float = np.inf

    def copy(self) -> "MessageState":
        return MessageState(self.tx_self.copy(), self.tx_int.copy(), self.rx_self.copy(),
                            self.rx_int.copy(), self.iteration, self.max_delta)


@dataclass
class BPResult:
    decisions: np.ndarray
    converged: bool
    iterations_used: int
    beliefs: np.ndarray
    deltas: list = field(default_factory=list)
    state: MessageState | None = None
    # "none": unique maxima; "joint": ties settled by a jointly maximising
    # schedule; "decimation": frustrated ties settled by clamped re-runs;
    # "frustrated": unresolved, per-node argmax returned
    tie_resolution: str = "none"


def _normalize(tab: np.ndarray) -> np.ndarray:
    return tab - tab.max(axis=1, keepdims=True)


def init_messages(problem: Problem) -> MessageState:
    n, K = problem.n, problem.K
    z = lambda: np.zeros((n, K))  # noqa: E731
    return MessageState(z(), z(), z(), z())


def receiver_half_round(state: MessageState, problem: Problem, normalize: bool = True) -> MessageState:
    """Every receiver maximises its factor against the incoming messages."""
    rx_self, rx_int = kernels.receiver_sweep(problem.stacked, state.tx_self, state.tx_int)
    rx_int[~problem.has_int] = 0.0
    if normalize:
        rx_self = _normalize(rx_self)
        rx_int = _normalize(rx_int)
    state.rx_self = rx_self
    state.rx_int = rx_int
    return state


def beliefs(state: MessageState, problem: Problem) -> np.ndarray:
    """``H_j = mu_{j<-j} + sum over victims i of mu_{j<-i}``."""
    H = state.rx_self.copy()
    np.add.at(H, problem.interferers, state.rx_int[problem.victims])
    return H


def transmitter_half_round(state: MessageState, problem: Problem, damping: float = 1.0,
                           normalize: bool = True) -> MessageState:
    """Every transmitter combines what its receivers sent and answers each of them.

    New tables are ``(1 - damping) * old + damping * raw``. ``max_delta`` is
    the largest entry change after normalisation, so a stationary message
    set reports zero even though the raw tables carry an additive offset.
    """
    if not 0.0 < damping <= 1.0:
        raise InvalidParameterError("damping must lie in (0, 1]")
    H = beliefs(state, problem)
    raw_self = H - state.rx_self
    raw_int = np.zeros_like(state.tx_int)
    v = problem.victims
    raw_int[v] = H[problem.interferers] - state.rx_int[v]

    new_self = (1.0 - damping) * state.tx_self + damping * raw_self
    new_int = (1.0 - damping) * state.tx_int + damping * raw_int
    if normalize:
        new_self = _normalize(new_self)
        new_int = _normalize(new_int)
    delta = max(np.abs(new_self - state.tx_self).max(initial=0.0),
                np.abs(new_int - state.tx_int).max(initial=0.0))
    state.tx_self = new_self
    state.tx_int = new_int
    state.max_delta = float(delta)
    state.iteration += 1
    return state


def factor_beliefs(state: MessageState, problem: Problem) -> np.ndarray:
    """``B_i(a, b) = f_i(a, b) + mu_{i->i}(a) + mu_{sigma(i)->i}(b)``."""
    return problem.stacked + state.tx_self[:, :, None] + state.tx_int[:, None, :]


def _components(problem: Problem) -> list[list[int]]:
    """Connected components of the interference graph, each in BFS order."""
    n = problem.n
    adj = [[] for _ in range(n)]
    for i in problem.victims:
        j = int(problem.sigma[i])
        adj[i].append(j)
        adj[j].append(int(i))
    seen = [False] * n
    comps = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        order, head = [root], 0
        while head < len(order):
            v = order[head]
            head += 1
            for u in sorted(adj[v]):
                if not seen[u]:
                    seen[u] = True
                    order.append(u)
        comps.append(order)
    return comps


def _consistent_assignment(H, B, problem, tie_tol):
    """Search for ``x`` maximising every node belief and every factor belief.

    Domains hold the near-maximal values of each node belief; each factor
    admits only the near-maximal cells of its belief. Components are solved
    independently by backtracking with values tried in increasing grid
    order. Returns None when no such assignment exists.
    """
    n = problem.n
    sigma = problem.sigma
    domains = [np.flatnonzero(H[j] >= H[j].max() - tie_tol) for j in range(n)]
    allowed = []
    for i in range(n):
        ok = B[i] >= B[i].max() - tie_tol
        if not problem.has_int[i]:
            ok = np.broadcast_to(ok.any(axis=1)[:, None], ok.shape)
        allowed.append(ok)
    touch = [[i] for i in range(n)]
    for i in problem.victims:
        touch[int(sigma[i])].append(int(i))

    x = np.full(n, -1, dtype=np.int64)

    def consistent(v):
        for i in touch[v]:
            a = x[i]
            b = x[sigma[i]] if problem.has_int[i] else a
            if a >= 0 and b >= 0 and not allowed[i][a, b]:
                return False
        return True

    def search(order, k):
        if k == len(order):
            return True
        v = order[k]
        for val in domains[v]:
            x[v] = val
            if consistent(v) and search(order, k + 1):
                return True
        x[v] = -1
        return False

    for comp in _components(problem):
        if not search(comp, 0):
            return None
    return x


def _decode(state: MessageState, problem: Problem, tie_tol: float):
    """Returns ``(x, tied, consistent)``."""
    H = beliefs(state, problem)
    top = H >= H.max(axis=1, keepdims=True) - tie_tol
    x = np.argmax(top, axis=1).astype(np.int64)
    if np.all(top.sum(axis=1) == 1):
        return x, False, True
    joint = _consistent_assignment(H, factor_beliefs(state, problem), problem, tie_tol)
    if joint is None:
        return x, True, False
    return joint, True, True


def decide(state: MessageState, problem: Problem) -> np.ndarray:
    """Argmax of each transmitter's belief; ties go to the lowest grid index.

    This is the plain per-node rule. :func:`run` refines it when beliefs
    are tied, see :func:`decode`.
    """
    return np.argmax(beliefs(state, problem), axis=1).astype(np.int64)


def decode(state: MessageState, problem: Problem, tie_tol: float = 1e-9) -> np.ndarray:
    """Tie-aware decision.

    When some belief has several maximisers (within ``tie_tol``), the
    per-node argmax can mix maximisers of different optimal schedules. The
    decision is then the first assignment, in grid order, that maximises
    all node and factor beliefs jointly; if none exists the per-node
    lowest-index argmax is returned.
    """
    return _decode(state, problem, tie_tol)[0]


def auto_tie_tol(max_delta: float) -> float:
    return float(np.clip(100.0 * max_delta, 1e-9, 1e-4))


def _iterate(problem, max_iters, damping, tol, trace=None):
    state = init_messages(problem)
    converged = False
    deltas = []
    while state.iteration < max_iters:
        receiver_half_round(state, problem)
        transmitter_half_round(state, problem, damping)
        deltas.append(state.max_delta)
        if trace is not None:
            trace.write(json.dumps({"iteration": state.iteration, "max_delta": state.max_delta,
                                    "decisions": decide(state, problem).tolist()}) + "\n")
        if state.max_delta < tol:
            converged = True
            break
    return state, converged, deltas


def _decimate(problem, state, tie_tol, max_iters, damping, tol, depth):
    """Resolve a frustrated tie by clamping the first tied transmitter to each
    of its tied values and re-running BP; the best candidate wins.

    Candidates are ranked by their sum utility, which needs one global
    aggregation. Returns None if no clamped run converges.
    """
    H = beliefs(state, problem)
    top = H >= H.max(axis=1, keepdims=True) - tie_tol
    v = int(np.flatnonzero(top.sum(axis=1) > 1)[0])
    best, best_val = None, None
    for a in np.flatnonzero(top[v]):
        sub = problem.clamped(v, int(a))
        st, conv, _ = _iterate(sub, max_iters, damping, tol)
        if not conv:
            continue
        ttol = auto_tie_tol(st.max_delta)
        x, tied, ok = _decode(st, sub, ttol)
        if not ok:
            if depth >= problem.n:
                continue
            x = _decimate(sub, st, ttol, max_iters, damping, tol, depth + 1)
            if x is None:
                continue
        val = math.fsum(link_utilities(problem.tables, problem.sigma, x))
        if best_val is None or val > best_val:
            best, best_val = x, val
    return best


def run(problem: Problem, max_iters: int = 100, damping: float = 0.5, tol: float = 1e-6,
        trace: TextIO | None = None, tie_tol: float | None = None,
        decimate: bool = True) -> BPResult:
    """Alternate half rounds until the largest message change drops below ``tol``.

    Decisions taken before convergence can be infeasible and should go
    through :func:`domsched.region.project_feasible`. By default belief ties
    are detected with a tolerance of ``100 * max_delta`` clipped to
    ``[1e-9, 1e-4]``, matching the residual error of a run stopped at ``tol``.
    A converged run whose tied beliefs admit no jointly maximising schedule
    falls back to decimation unless ``decimate`` is False.
    """
    if max_iters < 1:
        raise InvalidParameterError("max_iters must be >= 1")
    if not tol > 0:
        raise InvalidParameterError("tol must be > 0")
    if not 0.0 < damping <= 1.0:
        raise InvalidParameterError("damping must lie in (0, 1]")
    state, converged, deltas = _iterate(problem, max_iters, damping, tol, trace)
    if tie_tol is None:
        tie_tol = auto_tie_tol(state.max_delta)
    x, tied, ok = _decode(state, problem, tie_tol)
    resolution = "joint" if tied else "none"
    if converged and not ok:
        resolution = "frustrated"
        if decimate:
            xd = _decimate(problem, state, tie_tol, max_iters, damping, tol, 1)
            if xd is not None:
                x, resolution = xd, "decimation"
    return BPResult(x, converged, state.iteration, beliefs(state, problem), deltas, state,
                    resolution)
