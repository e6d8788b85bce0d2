"""Weighted undirected communication graphs: cycles, circulants, edge lists.

Node ids are 1-based, matching the usual agent numbering convention, and
index arithmetic on cycles is modular (N+1 wraps to 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "NetworkGraph",
    "cycle_graph",
    "circulant_graph",
    "graph_from_edges",
    "neighbors",
    "is_connected",
    "graph_from_json",
]


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Undirected graph with strictly positive symmetric edge weights.

    Edges are stored as sorted 1-based pairs; weight lookup is
    order-independent.  Connectivity is not enforced at construction; use
    :func:`is_connected`.
    """

    n_agents: int
    edges: tuple[tuple[int, int], ...]
    edge_weights: tuple[float, ...]
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for (i, j), w in zip(self.edges, self.edge_weights, strict=True):
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (1 <= i < j <= self.n_agents):
                raise ValueError(f"edge ({i},{j}) out of range or not sorted")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            if not w > 0:
                raise ValueError(f"weight of edge ({i},{j}) must be positive, got {w}")
            seen.add((i, j))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def weight(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        try:
            return self.edge_weights[self.edges.index(key)]
        except ValueError:
            raise KeyError(f"no edge between {i} and {j}") from None

    @cached_property
    def _adjacency_sets(self) -> tuple[frozenset, ...]:
        adj = [set() for _ in range(self.n_agents + 1)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """0-based (src, dst, w) arrays over undirected edges."""
        if not self.edges:
            z = np.zeros(0, dtype=int)
            return z, z, np.zeros(0)
        e = np.asarray(self.edges, dtype=int) - 1
        return e[:, 0], e[:, 1], np.asarray(self.edge_weights, dtype=float)

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric (N, N) weight matrix."""
        w = np.zeros((self.n_agents, self.n_agents))
        src, dst, wts = self.edge_arrays
        w[src, dst] = wts
        w[dst, src] = wts
        return w

    def cycle_weights(self, order: tuple[int, ...]) -> np.ndarray:
        """Weights of consecutive edges along a node ordering (wrapping)."""
        k = len(order)
        return np.array(
            [self.weight(order[i], order[(i + 1) % k]) for i in range(k)]
        )

    def has_cycle(self, order: tuple[int, ...]) -> bool:
        """True if all consecutive (wrapping) pairs of ``order`` are edges."""
        k = len(order)
        if k < 3:
            return False
        adj = self._adjacency_sets
        return all(order[(i + 1) % k] in adj[order[i]] for i in range(k))

    def is_cycle_graph(self) -> bool:
        """True if this is exactly the cycle 1-2-...-N-1."""
        if self.n_agents < 3 or self.n_edges != self.n_agents:
            return False
        return self.has_cycle(tuple(range(1, self.n_agents + 1)))

    def to_json(self) -> dict:
        if self.meta.get("type") == "cycle":
            n = self.n_agents
            return {
                "type": "cycle",
                "n": n,
                "weights": [self.weight(i, i % n + 1) for i in range(1, n + 1)],
            }
        if self.meta.get("type") == "circulant":
            return {
                "type": "circulant",
                "n": self.n_agents,
                "k": self.meta["k"],
                "weights": [self.edge_weights[0]],
            }
        return {
            "type": "edges",
            "n": self.n_agents,
            "edges": [[i, j, w] for (i, j), w in zip(self.edges, self.edge_weights)],
        }

    def __repr__(self):
        return f"NetworkGraph(n_agents={self.n_agents}, n_edges={self.n_edges})"


def cycle_graph(n: int, weights=None) -> NetworkGraph:
    """Cycle graph H_N with edges {i, i+1} (mod N), 1-based.

    ``weights[i-1]`` is the weight of edge {i, i+1}; the last entry weights
    the wrap-around edge {1, N}.  Uniform unit weights by default.
    """
    if n < 3:
        raise ValueError("cycle graph requires N >= 3")
    if weights is None:
        weights = [1.0] * n
    weights = [float(w) for w in weights]
    if len(weights) != n:
        raise ValueError(f"expected {n} weights, got {len(weights)}")
    pairs = []
    for i in range(1, n + 1):
        j = i % n + 1
        pairs.append(((min(i, j), max(i, j)), weights[i - 1]))
    pairs.sort()
    return NetworkGraph(
        n_agents=n,
        edges=tuple(e for e, _ in pairs),
        edge_weights=tuple(w for _, w in pairs),
        meta={"type": "cycle"},
    )


def circulant_graph(n: int, k: int, weight: float = 1.0) -> NetworkGraph:
    """Circulant graph F_{N,k}: edges between nodes at cyclic distance <= k."""
    if k < 1:
        raise ValueError("circulant graph requires k >= 1")
    if 2 * k >= n:
        raise ValueError("circulant graph requires 2k < N")
    edges = []
    for i in range(1, n + 1):
        for d in range(1, k + 1):
            j = (i + d - 1) % n + 1
            edges.append((min(i, j), max(i, j)))
    edges = sorted(set(edges))
    if len(edges) != k * n:
        raise AssertionError("circulant edge count mismatch")
    return NetworkGraph(
        n_agents=n,
        edges=tuple(edges),
        edge_weights=tuple([float(weight)] * len(edges)),
        meta={"type": "circulant", "k": k},
    )


def graph_from_edges(n: int, edges) -> NetworkGraph:
    """Arbitrary graph from an iterable of (i, j, weight) triples."""
    pairs = []
    for i, j, w in edges:
        pairs.append(((min(int(i), int(j)), max(int(i), int(j))), float(w)))
    pairs.sort()
    return NetworkGraph(
        n_agents=n,
        edges=tuple(e for e, _ in pairs),
        edge_weights=tuple(w for _, w in pairs),
        meta={"type": "edges"},
    )


def neighbors(g: NetworkGraph, i: int) -> set[int]:
    """Set of nodes adjacent to node i (1-based)."""
    if not (1 <= i <= g.n_agents):
        raise ValueError(f"node {i} out of range 1..{g.n_agents}")
    return set(g._adjacency_sets[i])


def is_connected(g: NetworkGraph) -> bool:
    """Breadth-first connectivity check."""
    if g.n_agents == 1:
        return True
    adj = g._adjacency_sets
    seen = {1}
    frontier = [1]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return len(seen) == g.n_agents


def graph_from_json(obj: dict) -> NetworkGraph:
    """Build a graph from the JSON schema used by configs.

    Schemas: ``{"type": "cycle", "n": N, "weights": [...]}``,
    ``{"type": "circulant", "n": N, "k": k, "weights": [w]}``, and
    ``{"type": "edges", "n": N, "edges": [[i, j, w], ...]}``.
    """
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError(f"graph JSON must carry a 'type' field: {obj!r}")
    kind = obj["type"]
    allowed = {
        "cycle": {"type", "n", "weights"},
        "circulant": {"type", "n", "k", "weights"},
        "edges": {"type", "n", "edges"},
    }
    if kind not in allowed:
        raise ValueError(f"unknown graph type {kind!r}")
    unknown = set(obj) - allowed[kind]
    if unknown:
        raise ValueError(f"unknown graph keys {sorted(unknown)}")
    if kind == "cycle":
        return cycle_graph(int(obj["n"]), obj.get("weights"))
    if kind == "circulant":
        weights = obj.get("weights", [1.0])
        if len(weights) != 1:
            raise ValueError("circulant graphs take a single uniform weight")
        return circulant_graph(int(obj["n"]), int(obj["k"]), float(weights[0]))
    return graph_from_edges(int(obj["n"]), obj["edges"])
