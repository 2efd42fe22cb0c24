"""Inter-datacenter WAN graph model and builders.

Nodes are integers 0..n-1. Edges are undirected; every edge provides two
independent directed arcs (one per direction) of equal capacity, expressed
in volume-units per timeslot.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class Arc(NamedTuple):
    """One direction of an undirected edge."""

    tail: int
    head: int


# 12-node / 19-edge reconstruction of Google's B4 inter-datacenter WAN.
# The published material gives only node/edge counts and a world-map figure;
# this adjacency is the usual research reconstruction (two US-west sites,
# US-central/east, Europe, Asia). Override with a topology file if an exact
# adjacency is required.
GSCALE_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (2, 5), (3, 4),
    (4, 5), (4, 6), (5, 7), (6, 7), (6, 8), (7, 8), (8, 9), (8, 10),
    (9, 10), (9, 11), (10, 11),
)


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph with uniform per-arc capacity.

    Construction does not validate; run :func:`validate` to get diagnostics.
    All builders in this module return already-valid topologies.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    capacity: float = 1.0
    _adjacency: dict[int, tuple[tuple[int, int], ...]] = field(
        init=False, repr=False, compare=False, default=None  # type: ignore[assignment]
    )

    def __post_init__(self):
        norm = tuple((min(u, v), max(u, v)) for u, v in self.edges)
        object.__setattr__(self, "edges", norm)
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(self.node_count)}
        for idx, (u, v) in enumerate(norm):
            if u == v or not (0 <= u < self.node_count and 0 <= v < self.node_count):
                continue
            adj[u].append((v, idx))
            adj[v].append((u, idx))
        object.__setattr__(
            self,
            "_adjacency",
            {v: tuple(sorted(nbrs)) for v, nbrs in adj.items()},
        )

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> tuple[tuple[int, int], ...]:
        """(neighbor, edge index) pairs in ascending neighbor order."""
        return self._adjacency[v]

    def edge_index(self, u: int, v: int) -> int:
        a, b = (u, v) if u < v else (v, u)
        for nbr, idx in self._adjacency[a]:
            if nbr == b:
                return idx
        raise KeyError((u, v))

    def arcs(self) -> list[Arc]:
        out = []
        for u, v in self.edges:
            out.append(Arc(u, v))
            out.append(Arc(v, u))
        return out

    def is_connected(self) -> bool:
        if self.node_count == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for nbr, _ in self._adjacency.get(v, ()):
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        return len(seen) == self.node_count


def validate(topo: Topology) -> list[str]:
    """Return one diagnostic string per invariant violation (empty if valid)."""
    problems: list[str] = []
    if topo.node_count <= 0:
        problems.append("node count must be positive")
    if topo.capacity <= 0:
        problems.append("capacity must be > 0")
    seen: set[tuple[int, int]] = set()
    for u, v in topo.edges:
        if u == v:
            problems.append(f"self-loop at node {u}")
            continue
        if not (0 <= u < topo.node_count and 0 <= v < topo.node_count):
            problems.append(f"edge ({u}, {v}) references unknown node")
            continue
        if (u, v) in seen:
            problems.append(f"duplicate edge ({u}, {v})")
        seen.add((u, v))
    structurally_sound = topo.node_count > 0 and not any(
        "unknown node" in p for p in problems
    )
    if structurally_sound and not topo.is_connected():
        problems.append("graph is disconnected")
    return problems


def build_gscale(capacity: float = 1.0) -> Topology:
    """The 12-node / 19-edge GScale (B4-derived) topology."""
    return Topology(node_count=12, edges=GSCALE_EDGES, capacity=capacity)


def build_random(n: int, m: int, seed: int, capacity: float = 1.0) -> Topology:
    """Connected random simple graph with n nodes and m edges.

    A uniform random labeled spanning tree (via a Pruefer sequence) guarantees
    connectivity; the remaining m-(n-1) edges are drawn uniformly without
    replacement from the unused node pairs. Pure function of (n, m, seed).
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if m < n - 1 or m > n * (n - 1) // 2:
        raise ValueError(f"infeasible edge count m={m} for n={n}")
    rng = random.Random(seed)
    if n == 2:
        tree_edges = [(0, 1)]
    else:
        prufer = [rng.randrange(n) for _ in range(n - 2)]
        degree = [1] * n
        for v in prufer:
            degree[v] += 1
        tree_edges = []
        leaves = [v for v in range(n) if degree[v] == 1]
        heapq.heapify(leaves)
        for v in prufer:
            leaf = heapq.heappop(leaves)
            tree_edges.append((min(leaf, v), max(leaf, v)))
            degree[v] -= 1
            if degree[v] == 1:
                heapq.heappush(leaves, v)
        u, v = leaves[0], leaves[1]
        tree_edges.append((min(u, v), max(u, v)))
    chosen = set(tree_edges)
    remaining = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if (u, v) not in chosen
    ]
    extra = rng.sample(remaining, m - (n - 1))
    edges = sorted(chosen | set(extra))
    return Topology(node_count=n, edges=tuple(edges), capacity=capacity)


def load_topology(path: str, capacity: float = 1.0) -> Topology:
    """Read the plain-text format: first line ``n m``, then m lines ``u v``."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty topology file")
    try:
        n, m = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"{path}: first line must be 'n m'") from exc
    if len(lines) - 1 != m:
        raise ValueError(f"{path}: expected {m} edge lines, found {len(lines) - 1}")
    edges = []
    for ln in lines[1:]:
        try:
            u, v = (int(x) for x in ln.split())
        except ValueError as exc:
            raise ValueError(f"{path}: bad edge line {ln!r}") from exc
        edges.append((u, v))
    topo = Topology(node_count=n, edges=tuple(edges), capacity=capacity)
    problems = validate(topo)
    if problems:
        raise ValueError(f"{path}: " + "; ".join(problems))
    return topo


def topologies_from_spec(spec: str, seed: int, capacity: float = 1.0) -> Topology:
    """Resolve a CLI topology spec: ``gscale``, ``random:n,m`` or ``file:path``."""
    if spec == "gscale":
        return build_gscale(capacity)
    if spec.startswith("random:"):
        try:
            n_s, m_s = spec[len("random:"):].split(",")
            return build_random(int(n_s), int(m_s), seed, capacity)
        except ValueError as exc:
            raise ValueError(f"bad random topology spec {spec!r}") from exc
    if spec.startswith("file:"):
        return load_topology(spec[len("file:"):], capacity)
    raise ValueError(f"unknown topology spec {spec!r}")


def spanning_connected(node_count: int, edges: Iterable[tuple[int, int]]) -> bool:
    """Connectivity check over an explicit edge list (shared helper)."""
    adj: dict[int, list[int]] = {}
    nodes = set(range(node_count))
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen == nodes
