"""Directed weighted communication graphs with leader pinning.

Edge convention: ``adjacency[i, j] > 0`` means agent ``i`` receives the
output of agent ``j``.  Pinning gains mark the agents that additionally
receive the reference trajectory.  Instances are immutable after
construction and safe to share across concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Topology:
    """Communication graph: non-negative edge weights, zero diagonal, 0/1 pinning."""

    adjacency: np.ndarray
    pinning: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=float)
        pin = np.array(self.pinning, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        n = adj.shape[0]
        if n < 1:
            raise ValueError("topology needs at least one agent")
        if pin.shape != (n,):
            raise ValueError(f"pinning must have length {n}")
        if not np.isfinite(adj).all():
            raise ValueError("adjacency weights must be finite")
        if (adj < 0).any():
            raise ValueError("adjacency weights must be non-negative")
        if np.diag(adj).any():
            raise ValueError("self-edges are forbidden (nonzero diagonal)")
        if not np.isin(pin, (0.0, 1.0)).all():
            raise ValueError("pinning gains must be 0 or 1")
        object.__setattr__(self, "adjacency", _frozen_array(adj))
        object.__setattr__(self, "pinning", _frozen_array(pin))

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def has_leader(self) -> bool:
        return bool(self.pinning.any())

    def in_neighbors(self, i: int) -> np.ndarray:
        """Indices j whose output agent i consumes."""
        return np.flatnonzero(self.adjacency[i] > 0)


@dataclass(frozen=True)
class LaplacianSet:
    """Degree matrix, graph Laplacian, and pinned Laplacian of a topology."""

    degree: np.ndarray
    laplacian: np.ndarray
    pinned: np.ndarray


def build_laplacian(topo: Topology) -> LaplacianSet:
    """Return degree D = diag(sum_j a_ij), L = D - A, and L + diag(g)."""
    degree = np.diag(topo.adjacency.sum(axis=1))
    laplacian = degree - topo.adjacency
    pinned = laplacian + np.diag(topo.pinning)
    return LaplacianSet(
        _frozen_array(degree), _frozen_array(laplacian), _frozen_array(pinned)
    )


def _reachable(start: list[int], edges_out: list[list[int]], n: int) -> np.ndarray:
    seen = np.zeros(n, dtype=bool)
    stack = list(start)
    seen[start] = True
    while stack:
        u = stack.pop()
        for v in edges_out[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def has_spanning_tree(topo: Topology, include_leader: bool = True) -> bool:
    """True when some root reaches every agent along directed edges.

    With ``include_leader`` and at least one pinned agent, the root is a
    virtual leader node wired to every pinned agent; otherwise any single
    agent may serve as the root.
    """
    n = topo.n_agents
    # information flows j -> i whenever a[i, j] > 0
    edges_out: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in topo.in_neighbors(i):
            edges_out[j].append(i)
    if include_leader and topo.has_leader:
        pinned = list(np.flatnonzero(topo.pinning > 0))
        return bool(_reachable(pinned, edges_out, n).all())
    return any(_reachable([r], edges_out, n).all() for r in range(n))


def neighborhood_error(
    topo: Topology,
    received_outputs: np.ndarray,
    leader_output: np.ndarray | None = None,
) -> np.ndarray:
    """Weighted disagreement with in-neighbors plus the pinned leader error.

    xi_i = sum_j a_ij (y_j - y_i) + g_i (y_0 - y_i)

    Computed from whatever signals the caller supplies; attacked or absent
    (NaN) channels propagate into the affected xi channels only through
    actual edges, never through zero-weight pairs.
    """
    y = np.asarray(received_outputs, dtype=float)
    n = topo.n_agents
    if y.ndim != 2 or y.shape[0] != n:
        raise ValueError(f"expected {n} output vectors, got shape {y.shape}")
    if topo.has_leader:
        if leader_output is None:
            raise ValueError("pinned topology requires a leader output")
        y0 = np.asarray(leader_output, dtype=float)
        if y0.shape != (y.shape[1],):
            raise ValueError("leader output dimension mismatch")
    elif leader_output is not None:
        raise ValueError("leader output supplied but no agent is pinned")
    xi = np.zeros_like(y)
    for i in range(n):
        acc = np.zeros(y.shape[1])
        for j in topo.in_neighbors(i):
            acc += topo.adjacency[i, j] * (y[j] - y[i])
        if topo.pinning[i]:
            acc += topo.pinning[i] * (y0 - y[i])
        xi[i] = acc
    return xi
