"""Communication topology: followers 1..N plus a leader node N+1.

An edge ``(i, j)`` means node ``j`` receives information from node ``i``.
Edge weights are always 1.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidTopology, NotPositiveDefinite

PD_RTOL = 1e-9


@dataclass(frozen=True)
class CommGraph:
    num_followers: int
    edges: frozenset

    @property
    def leader(self) -> int:
        return self.num_followers + 1

    @cached_property
    def neighbor_sets(self) -> dict[int, tuple[int, ...]]:
        nbrs = {j: [] for j in range(1, self.num_followers + 1)}
        for i, j in self.edges:
            nbrs[j].append(i)
        return {j: tuple(sorted(v)) for j, v in nbrs.items()}

    def neighbors(self, j: int) -> tuple[int, ...]:
        return self.neighbor_sets[j]

    @cached_property
    def adjacency(self) -> np.ndarray:
        """(N+1)x(N+1) matrix with ``A[j-1, i-1] = 1`` for each edge (i, j)."""
        n = self.num_followers + 1
        a = np.zeros((n, n))
        for i, j in self.edges:
            a[j - 1, i - 1] = 1.0
        a.setflags(write=False)
        return a

    def to_dict(self) -> dict:
        return {"followers": self.num_followers, "edges": [list(e) for e in sorted(self.edges)]}


def build_graph(num_followers: int, edges) -> CommGraph:
    """Validate an edge list and return the corresponding :class:`CommGraph`.

    Raises :class:`InvalidTopology` when the leader has an incoming edge, the
    follower subgraph is not undirected, or some follower cannot be reached
    from the leader (no spanning tree rooted at the leader).
    """
    n = int(num_followers)
    if n < 1 or n != num_followers:
        raise InvalidTopology(f"number of followers must be a positive integer, got {num_followers!r}")
    leader = n + 1
    edge_set = set()
    for e in edges:
        if len(e) != 2:
            raise InvalidTopology(f"edge {e!r} is not a pair")
        i, j = int(e[0]), int(e[1])
        if not (1 <= i <= leader and 1 <= j <= leader):
            raise InvalidTopology(f"edge ({i}, {j}) has a node outside 1..{leader}")
        if i == j:
            raise InvalidTopology(f"self-loop at node {i}")
        if j == leader:
            raise InvalidTopology(
                f"leader node {leader} must have no incoming edges, found ({i}, {j})"
            )
        edge_set.add((i, j))

    for i, j in edge_set:
        if i != leader and (j, i) not in edge_set:
            raise InvalidTopology(
                f"follower subgraph must be undirected: ({i}, {j}) present but ({j}, {i}) missing"
            )

    out = {k: [] for k in range(1, leader + 1)}
    for i, j in edge_set:
        out[i].append(j)
    seen = {leader}
    queue = deque([leader])
    while queue:
        for j in out[queue.popleft()]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    missing = sorted(set(range(1, leader)) - seen)
    if missing:
        raise InvalidTopology(
            f"graph has no spanning tree rooted at leader node {leader}: "
            f"followers {missing} are unreachable from the leader"
        )
    return CommGraph(n, frozenset(edge_set))


def laplacian(g: CommGraph) -> np.ndarray:
    a = np.array(g.adjacency)
    return np.diag(a.sum(axis=1)) - a


def h_matrix(g: CommGraph) -> np.ndarray:
    """Laplacian with the leader row and column removed, checked to be SPD."""
    h = laplacian(g)[:-1, :-1]
    eig = np.linalg.eigvalsh(h)
    if not np.allclose(h, h.T, atol=1e-12, rtol=0) or eig[0] <= PD_RTOL * max(eig[-1], 1.0):
        raise NotPositiveDefinite(
            f"H is not symmetric positive definite (eigenvalues {eig}); "
            "the topology violates the undirected/spanning-tree assumptions"
        )
    return h


def default_topology() -> CommGraph:
    """Six followers on an undirected chain 1-2-...-6; the leader informs 1 and 4."""
    edges = [(7, 1), (7, 4)]
    for i in range(1, 6):
        edges += [(i, i + 1), (i + 1, i)]
    return build_graph(6, edges)
