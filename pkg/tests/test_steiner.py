import random

import numpy as np
import pytest

from oracles import brute_force_steiner
from dccast_sim.steiner import (
    ForwardingTree,
    WeightedView,
    bottleneck_steiner_tree,
    exact_steiner_small,
    min_weight_steiner_tree,
    random_tree,
)
from dccast_sim.topology import Topology, build_random


def unit_view(topo):
    return WeightedView(topo, np.ones(topo.edge_count))


def random_instance(seed, n=8, m=14, n_terminals=3):
    topo = build_random(n, m, seed=seed)
    rng = random.Random(10_000 + seed)
    weights = np.array([rng.uniform(0.5, 10.0) for _ in range(topo.edge_count)])
    nodes = list(range(n))
    rng.shuffle(nodes)
    return WeightedView(topo, weights), nodes[0], frozenset(nodes[1 : 1 + n_terminals])


def test_single_terminal_is_shortest_path():
    # Path 0-1-2-3 plus a costly shortcut 0-3: the tree must be the cheap path.
    topo = Topology(node_count=4, edges=((0, 1), (1, 2), (2, 3), (0, 3)))
    view = WeightedView(topo, np.array([1.0, 1.0, 1.0, 5.0]))
    tree = min_weight_steiner_tree(view, 0, {3})
    assert tree.edges == ((0, 1), (1, 2), (2, 3))
    assert tree.total_weight(view) == 3.0


def test_star_spans_all_edges():
    topo = Topology(node_count=4, edges=((0, 1), (0, 2), (0, 3)))
    tree = min_weight_steiner_tree(unit_view(topo), 1, {2, 3})
    assert tree.edge_count == 3
    assert tree.total_weight(unit_view(topo)) == 3.0


def test_heuristic_within_two_of_exact_on_30_instances():
    ratios = []
    for seed in range(30):
        view, root, terminals = random_instance(seed)
        heur = min_weight_steiner_tree(view, root, terminals)
        exact = exact_steiner_small(view, root, terminals)
        assert heur.check_valid(view.topology) == []
        hw, ew = heur.total_weight(view), exact.total_weight(view)
        assert hw <= 2.0 * ew + 1e-9, f"seed {seed}: {hw} > 2x{ew}"
        ratios.append(hw / ew)
    close = sum(1 for r in ratios if r <= 1.2)
    assert close >= 0.8 * len(ratios), f"only {close}/30 within 1.2x of optimal"


def test_exact_matches_brute_force_enumeration():
    # Exhaustive spanning-subtree enumeration on small graphs is the oracle.
    checked = 0
    for seed in range(200):
        if checked >= 50:
            break
        topo = build_random(6, 8, seed=seed)
        if topo.edge_count > 9:
            continue
        rng = random.Random(seed)
        weights = np.array([rng.uniform(1.0, 9.0) for _ in range(topo.edge_count)])
        view = WeightedView(topo, weights)
        nodes = list(range(6))
        rng.shuffle(nodes)
        root, terminals = nodes[0], set(nodes[1:4])
        exact = exact_steiner_small(view, root, terminals)
        best_total, _ = brute_force_steiner(topo, weights, root, terminals)
        assert exact.total_weight(view) == pytest.approx(best_total, abs=1e-9)
        checked += 1
    assert checked == 50


def test_exact_two_terminal_equals_shortest_path_weight():
    view, root, terminals = random_instance(3, n_terminals=1)
    exact = exact_steiner_small(view, root, terminals)
    path_tree = min_weight_steiner_tree(view, root, terminals)
    # With one terminal the metric-closure heuristic is exactly Dijkstra.
    assert exact.total_weight(view) == pytest.approx(path_tree.total_weight(view), abs=1e-9)


def test_exact_rejects_large_instances():
    topo = build_random(17, 20, seed=1)
    view = WeightedView(topo, np.ones(20))
    with pytest.raises(ValueError, match="too large"):
        exact_steiner_small(view, 0, {1})
    topo = build_random(10, 14, seed=1)
    view = WeightedView(topo, np.ones(14))
    with pytest.raises(ValueError, match="too large"):
        exact_steiner_small(view, 0, set(range(1, 8)))


def test_bottleneck_equal_weights_matches_min_weight():
    topo = build_random(8, 13, seed=5)
    view = unit_view(topo)
    a = bottleneck_steiner_tree(view, 0, {3, 5})
    b = min_weight_steiner_tree(view, 0, {3, 5})
    assert a.edges == b.edges


def test_bottleneck_prefers_many_small_edges():
    # Direct edge of weight 10 versus a three-hop route of weight 4 each.
    topo = Topology(node_count=4, edges=((0, 1), (0, 3), (1, 2), (2, 3)))
    view = WeightedView(topo, np.array([4.0, 10.0, 4.0, 4.0]))
    tree = bottleneck_steiner_tree(view, 0, {3})
    assert tree.edges == ((0, 1), (1, 2), (2, 3))
    assert tree.max_edge_weight(view) == 4.0


def test_bottleneck_is_minimax_optimal_on_small_instances():
    for seed in range(20):
        topo = build_random(6, 9, seed=300 + seed)
        rng = random.Random(seed)
        weights = np.array([rng.uniform(1.0, 9.0) for _ in range(topo.edge_count)])
        view = WeightedView(topo, weights)
        root, terminals = 0, {2, 4}
        tree = bottleneck_steiner_tree(view, root, terminals)
        _, best_bottleneck = brute_force_steiner(topo, weights, root, terminals)
        assert tree.max_edge_weight(view) == pytest.approx(best_bottleneck, abs=1e-9)


def test_random_tree_deterministic_per_seed():
    topo = build_random(10, 18, seed=2)
    t1 = random_tree(topo, 0, {4, 7}, seed=99)
    t2 = random_tree(topo, 0, {4, 7}, seed=99)
    assert t1.edges == t2.edges
    assert t1.check_valid(topo) == []


def test_random_tree_single_terminal_is_path():
    topo = build_random(6, 9, seed=8)
    tree = random_tree(topo, 0, {5}, seed=1)
    degrees = {}
    for u, v in tree.edges:
        degrees[u] = degrees.get(u, 0) + 1
        degrees[v] = degrees.get(v, 0) + 1
    assert degrees[0] == 1 and degrees[5] == 1
    assert all(d <= 2 for d in degrees.values())


def test_random_tree_symmetric_choice_on_cycle():
    # On a 4-cycle with the terminal opposite the root, the two 2-edge routes
    # should each win roughly half of the seeds.
    topo = Topology(node_count=4, edges=((0, 1), (0, 3), (1, 2), (2, 3)))
    upper = 0
    for seed in range(1000):
        tree = random_tree(topo, 0, {2}, seed=seed)
        assert tree.edge_count == 2
        if (0, 1) in tree.edges:
            upper += 1
    assert 400 <= upper <= 600


def test_leaf_removal_disconnects_a_terminal():
    for seed in range(10):
        view, root, terminals = random_instance(seed + 50)
        tree = min_weight_steiner_tree(view, root, terminals)
        for drop in tree.edges:
            kept = [e for e in tree.edges if e != drop]
            adj = {}
            for u, v in kept:
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
            assert not terminals <= seen, "edge removal left all terminals reachable"


def test_forwarding_tree_validity_diagnostics():
    topo = Topology(node_count=4, edges=((0, 1), (1, 2), (2, 3)))
    bad = ForwardingTree(root=0, edges=((0, 1), (1, 2), (2, 3)), terminals=frozenset({2}))
    assert any("non-terminal leaf" in p for p in bad.check_valid(topo))
    good = ForwardingTree(root=0, edges=((0, 1), (1, 2)), terminals=frozenset({2}))
    assert good.check_valid(topo) == []


def test_arcs_from_root_orientation():
    topo = Topology(node_count=4, edges=((0, 1), (1, 2), (1, 3)))
    tree = min_weight_steiner_tree(unit_view(topo), 0, {2, 3})
    assert tree.arcs_from_root() == [(0, 1), (1, 2), (1, 3)]
