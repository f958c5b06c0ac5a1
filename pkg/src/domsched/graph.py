"""Directed interference graph and the single-cycle property of its components."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import NONE


@dataclass(frozen=True)
class InterferenceGraph:
    """Edges ``(sigma(i), i)``: interferer to victim.

    The undirected view is a multigraph on the same edge list, so a mutual
    pair ``i <-> j`` contributes two parallel edges (a 2-cycle).
    """

    n: int
    edges: tuple

    def in_degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for _, v in self.edges:
            deg[v] += 1
        return deg

    @classmethod
    def from_edges(cls, n: int, edges) -> "InterferenceGraph":
        """Arbitrary multigraph, not necessarily produced by a sigma map."""
        return cls(n, tuple((int(u), int(v)) for u, v in edges))

    def write_edgelist(self, path) -> None:
        """Plain ``source target`` lines with 1-based link labels."""
        lines = ["# interferer victim"] + [f"{u + 1} {v + 1}" for u, v in self.edges]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ComponentInfo:
    vertices: tuple
    edges: int
    cycle_count: int


def build_graph(sigma) -> InterferenceGraph:
    sigma = np.asarray(sigma)
    edges = tuple((int(s), i) for i, s in enumerate(sigma) if s != NONE)
    return InterferenceGraph(len(sigma), edges)


def component_cycle_counts(g: InterferenceGraph) -> list[ComponentInfo]:
    """Cyclomatic number ``edges - vertices + 1`` of every connected component."""
    parent = list(range(g.n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    members: dict[int, list[int]] = {}
    for v in range(g.n):
        members.setdefault(find(v), []).append(v)
    edge_count = dict.fromkeys(members, 0)
    for u, _ in g.edges:
        edge_count[find(u)] += 1
    return [ComponentInfo(tuple(vs), edge_count[r], edge_count[r] - len(vs) + 1)
            for r, vs in sorted(members.items())]


def verify_single_cycle_property(sigma_or_graph):
    """Check that no component of the undirected graph holds more than one cycle.

    Returns ``(True, None)`` or ``(False, offending_component)``.
    """
    g = sigma_or_graph if isinstance(sigma_or_graph, InterferenceGraph) else build_graph(sigma_or_graph)
    for comp in component_cycle_counts(g):
        if comp.cycle_count > 1:
            return False, comp
    return True, None
