"""Terminal-spanning tree construction.

Provides the min-weight Steiner heuristic used for forwarding-tree selection,
a bottleneck (minimax edge weight) variant, a randomized variant, and an
exact dynamic-programming solver for small instances used as a test oracle.

Determinism: all weight ties are broken by the smallest (node, node)
lexicographic edge order, so identical inputs always yield identical trees.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass

import numpy as np

from .topology import Topology


@dataclass(frozen=True)
class WeightedView:
    """A topology together with one nonnegative weight per edge."""

    topology: Topology
    weights: np.ndarray  # aligned with topology.edges

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.topology.edge_count,):
            raise ValueError("need exactly one weight per edge")
        if (w < 0).any():
            raise ValueError("edge weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    def weight(self, u: int, v: int) -> float:
        return float(self.weights[self.topology.edge_index(u, v)])


@dataclass(frozen=True)
class ForwardingTree:
    """Acyclic edge set spanning a root and its terminals.

    Every leaf is a terminal; orientation away from the root is derived,
    not stored.
    """

    root: int
    edges: tuple[tuple[int, int], ...]
    terminals: frozenset[int]

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple(sorted((min(u, v), max(u, v)) for u, v in self.edges))
        )
        object.__setattr__(self, "terminals", frozenset(self.terminals))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def nodes(self) -> set[int]:
        out = {self.root}
        for u, v in self.edges:
            out.add(u)
            out.add(v)
        return out

    def arcs_from_root(self) -> list[tuple[int, int]]:
        """Directed arcs oriented away from the root (BFS order)."""
        adj: dict[int, list[int]] = {}
        for u, v in self.edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        arcs = []
        seen = {self.root}
        frontier = [self.root]
        while frontier:
            nxt = []
            for u in frontier:
                for v in sorted(adj.get(u, ())):
                    if v not in seen:
                        seen.add(v)
                        arcs.append((u, v))
                        nxt.append(v)
            frontier = nxt
        return arcs

    def total_weight(self, view: WeightedView) -> float:
        return float(sum(view.weight(u, v) for u, v in self.edges))

    def max_edge_weight(self, view: WeightedView) -> float:
        return float(max(view.weight(u, v) for u, v in self.edges))

    def check_valid(self, topology: Topology) -> list[str]:
        """Structural diagnostics; empty when all tree invariants hold."""
        problems = []
        nodes = self.nodes()
        if len(self.edges) != len(nodes) - 1:
            problems.append("edge count != node count - 1 (not a tree)")
        known = {(min(u, v), max(u, v)) for u, v in topology.edges}
        for e in self.edges:
            if e not in known:
                problems.append(f"edge {e} not in topology")
        adj: dict[int, list[int]] = {}
        for u, v in self.edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        seen = {self.root}
        stack = [self.root]
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if seen != nodes:
            problems.append("tree is not connected")
        missing = (self.terminals | {self.root}) - nodes
        if missing:
            problems.append(f"terminals not spanned: {sorted(missing)}")
        for v in nodes:
            if len(adj.get(v, ())) == 1 and v not in self.terminals and v != self.root:
                problems.append(f"non-terminal leaf {v}")
        return problems


def _dijkstra(view: WeightedView, source: int) -> tuple[dict[int, float], dict[int, int]]:
    """Weighted shortest paths with deterministic (dist, node) tie-breaking."""
    topo = view.topology
    dist = {source: 0.0}
    pred: dict[int, int] = {}
    heap = [(0.0, source)]
    done: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, eidx in topo.neighbors(u):
            nd = d + float(view.weights[eidx])
            if v not in dist or nd < dist[v] - 1e-15:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _path_from_pred(pred: dict[int, int], source: int, target: int) -> list[int]:
    path = [target]
    while path[-1] != source:
        path.append(pred[path[-1]])
    path.reverse()
    return path


def _prune_to_tree(
    view: WeightedView, edge_set: set[tuple[int, int]], root: int, terminals: frozenset[int]
) -> ForwardingTree:
    """MST of the edge union, then iterative removal of non-terminal leaves."""
    topo = view.topology
    adj: dict[int, list[tuple[float, int, int]]] = {}
    for u, v in edge_set:
        w = view.weight(u, v)
        adj.setdefault(u, []).append((w, v, u))
        adj.setdefault(v, []).append((w, u, v))
    # Prim from the root with (weight, u, v) keys for deterministic ties.
    in_tree = {root}
    tree_edges: set[tuple[int, int]] = set()
    heap: list[tuple[float, int, int]] = []
    for w, v, u in adj.get(root, ()):
        heapq.heappush(heap, (w, min(u, v), max(u, v), v))
    while heap:
        w, a, b, new = heapq.heappop(heap)
        if new in in_tree:
            continue
        in_tree.add(new)
        tree_edges.add((a, b))
        for w2, v2, u2 in adj.get(new, ()):
            if v2 not in in_tree:
                heapq.heappush(heap, (w2, min(u2, v2), max(u2, v2), v2))
    # Drop dangling non-terminal leaves.
    keep = set(tree_edges)
    degree: dict[int, int] = {}
    for u, v in keep:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    changed = True
    protected = set(terminals) | {root}
    while changed:
        changed = False
        for u, v in sorted(keep):
            for leaf, other in ((u, v), (v, u)):
                if degree.get(leaf, 0) == 1 and leaf not in protected:
                    keep.discard((u, v))
                    degree[leaf] -= 1
                    degree[other] -= 1
                    changed = True
                    break
    return ForwardingTree(root=root, edges=tuple(keep), terminals=terminals)


def min_weight_steiner_tree(
    view: WeightedView, root: int, terminals: set[int] | frozenset[int]
) -> ForwardingTree:
    """Metric-closure heuristic (shortest-path completion, 2-approximation).

    Shortest paths between all required nodes form a complete weighted graph;
    its MST is expanded back to underlying paths, reduced to a tree, and
    pruned so every leaf is a terminal.
    """
    terminals = frozenset(terminals)
    if not terminals:
        raise ValueError("terminals must be non-empty")
    required = sorted(terminals | {root})
    topo = view.topology
    for v in required:
        if not (0 <= v < topo.node_count):
            raise ValueError(f"node {v} not in topology")
    if len(required) == 1:
        return ForwardingTree(root=root, edges=(), terminals=terminals)

    dists: dict[int, dict[int, float]] = {}
    preds: dict[int, dict[int, int]] = {}
    for s in required:
        dists[s], preds[s] = _dijkstra(view, s)
        for t in required:
            if t not in dists[s]:
                raise ValueError(f"terminal {t} unreachable from {s}")

    # MST over the metric closure, deterministic tie order.
    in_tree = {required[0]}
    closure_edges: list[tuple[int, int]] = []
    cand: list[tuple[float, int, int]] = []
    for t in required[1:]:
        heapq.heappush(cand, (dists[required[0]][t], required[0], t))
    while len(in_tree) < len(required):
        d, s, t = heapq.heappop(cand)
        if t in in_tree:
            continue
        in_tree.add(t)
        closure_edges.append((s, t))
        for t2 in required:
            if t2 not in in_tree:
                heapq.heappush(cand, (dists[t][t2], t, t2))

    union: set[tuple[int, int]] = set()
    for s, t in closure_edges:
        path = _path_from_pred(preds[s], s, t)
        for a, b in zip(path, path[1:]):
            union.add((min(a, b), max(a, b)))
    return _prune_to_tree(view, union, root, terminals)


def bottleneck_steiner_tree(
    view: WeightedView, root: int, terminals: set[int] | frozenset[int]
) -> ForwardingTree:
    """Tree whose maximum edge weight is minimal over all spanning trees.

    Finds the smallest threshold under which root and terminals are still
    connected, then runs the min-weight heuristic restricted to edges at or
    below the threshold.
    """
    terminals = frozenset(terminals)
    required = terminals | {root}
    topo = view.topology
    order = np.argsort(view.weights, kind="stable")
    levels = sorted(set(float(w) for w in view.weights))

    def connected_at(theta: float) -> bool:
        keep = [topo.edges[i] for i in range(topo.edge_count) if view.weights[i] <= theta + 1e-12]
        adj: dict[int, list[int]] = {}
        for u, v in keep:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        seen = {root}
        stack = [root]
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return required <= seen

    lo, hi = 0, len(levels) - 1
    if not connected_at(levels[hi]):
        raise ValueError("terminals not connected in topology")
    while lo < hi:
        mid = (lo + hi) // 2
        if connected_at(levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    theta = levels[lo]

    keep_idx = [i for i in order if view.weights[i] <= theta + 1e-12]
    sub_edges = tuple(topo.edges[i] for i in keep_idx)
    sub = Topology(node_count=topo.node_count, edges=sub_edges, capacity=topo.capacity)
    sub_w = np.array([view.weights[topo.edge_index(u, v)] for u, v in sub.edges])
    tree = min_weight_steiner_tree(WeightedView(sub, sub_w), root, terminals)
    return ForwardingTree(root=root, edges=tree.edges, terminals=terminals)


def random_tree(
    topology: Topology, root: int, terminals: set[int] | frozenset[int], seed: int
) -> ForwardingTree:
    """Min-weight tree under i.i.d. uniform (0, 1] edge weights drawn per seed."""
    rng = random.Random(seed)
    weights = np.array([1.0 - rng.random() for _ in range(topology.edge_count)])
    return min_weight_steiner_tree(WeightedView(topology, weights), root, frozenset(terminals))


def exact_steiner_small(
    view: WeightedView, root: int, terminals: set[int] | frozenset[int]
) -> ForwardingTree:
    """Minimum-total-weight terminal-spanning tree by subset dynamic programming.

    Dreyfus-Wagner over terminal subsets; restricted to at most 6 terminals
    and 16 nodes. Intended as an oracle for the heuristic, not for simulation.
    """
    terminals = frozenset(terminals)
    topo = view.topology
    n = topo.node_count
    terms = sorted(terminals - {root})
    if len(terms) > 6 or n > 16:
        raise ValueError("instance too large for exact solver")
    if not terminals:
        raise ValueError("terminals must be non-empty")
    if not terms:  # every terminal equals the root
        return ForwardingTree(root=root, edges=(), terminals=terminals)

    # All-pairs shortest paths (Floyd-Warshall) with path reconstruction.
    inf = float("inf")
    dist = np.full((n, n), inf)
    nxt = -np.ones((n, n), dtype=int)
    for v in range(n):
        dist[v, v] = 0.0
        nxt[v, v] = v
    for idx, (u, v) in enumerate(topo.edges):
        w = float(view.weights[idx])
        if w < dist[u, v]:
            dist[u, v] = dist[v, u] = w
            nxt[u, v] = v
            nxt[v, u] = u
    for k in range(n):
        for i in range(n):
            dik = dist[i, k]
            if dik == inf:
                continue
            for j in range(n):
                alt = dik + dist[k, j]
                if alt < dist[i, j] - 1e-15:
                    dist[i, j] = alt
                    nxt[i, j] = nxt[i, k]

    t_count = len(terms)
    full = (1 << t_count) - 1
    dp = np.full((full + 1, n), inf)
    # choice[mask][v]: ("base", t) | ("merge", sub) | ("ext", u)
    choice: dict[tuple[int, int], tuple] = {}
    for i, t in enumerate(terms):
        for v in range(n):
            dp[1 << i, v] = dist[t, v]
            choice[(1 << i, v)] = ("base", t)

    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        # Merge two sub-trees at the same vertex.
        sub = (mask - 1) & mask
        while sub:
            if sub < (mask ^ sub):  # each unordered split once
                other = mask ^ sub
                merged = dp[sub] + dp[other]
                better = merged < dp[mask] - 1e-15
                for v in np.nonzero(better)[0]:
                    dp[mask, v] = merged[v]
                    choice[(mask, v)] = ("merge", sub)
            sub = (sub - 1) & mask
        # Propagate through shortest paths (closure over the full matrix).
        base = dp[mask].copy()
        for v in range(n):
            ext = base + dist[:, v]
            u = int(np.argmin(ext))
            if ext[u] < dp[mask, v] - 1e-15:
                dp[mask, v] = ext[u]
                choice[(mask, v)] = ("ext", u)

    edges: set[tuple[int, int]] = set()

    def add_path(a: int, b: int) -> None:
        while a != b:
            step = int(nxt[a, b])
            edges.add((min(a, step), max(a, step)))
            a = step

    def rebuild(mask: int, v: int) -> None:
        kind, arg = choice[(mask, v)]
        if kind == "base":
            add_path(arg, v)
        elif kind == "merge":
            rebuild(arg, v)
            rebuild(mask ^ arg, v)
        else:  # "ext": subtree rooted at arg, connected to v by a shortest path
            add_path(arg, v)
            rebuild(mask, arg)

    rebuild(full, root)
    tree = _prune_to_tree(view, edges, root, terminals)
    got = tree.total_weight(view) if tree.edges else 0.0
    want = float(dp[full, root])
    if abs(got - want) > 1e-6 * max(1.0, want):
        raise AssertionError(f"reconstruction weight {got} != dp optimum {want}")
    return tree
