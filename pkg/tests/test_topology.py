import pytest

from dccast_sim.topology import (
    Topology,
    build_random,
    load_topology,
    spanning_connected,
    topologies_from_spec,
    validate,
)


def test_gscale_node_and_edge_counts(gscale):
    assert gscale.node_count == 12
    assert gscale.edge_count == 19


def test_gscale_connected_with_min_degree_two(gscale):
    # Independent connectivity check over the raw edge list, run before
    # trusting the Topology adjacency itself.
    assert spanning_connected(12, gscale.edges)
    assert gscale.is_connected()
    assert min(len(gscale.neighbors(v)) for v in range(12)) >= 2


def test_gscale_validates_clean(gscale):
    assert validate(gscale) == []


def test_arc_count_is_twice_edge_count(gscale):
    assert len(gscale.arcs()) == 2 * gscale.edge_count
    assert len(set(gscale.arcs())) == 2 * gscale.edge_count


def test_random_topology_counts_and_connectivity():
    topo = build_random(50, 150, seed=7)
    assert topo.node_count == 50
    assert topo.edge_count == 150
    assert spanning_connected(50, topo.edges)
    assert validate(topo) == []


def test_random_topology_deterministic():
    assert build_random(50, 150, seed=7).edges == build_random(50, 150, seed=7).edges
    assert build_random(50, 150, seed=7).edges != build_random(50, 150, seed=8).edges


def test_random_minimum_edges_gives_tree():
    topo = build_random(3, 2, seed=4)
    assert topo.edge_count == 2
    assert spanning_connected(3, topo.edges)


@pytest.mark.parametrize("n,m", [(5, 3), (5, 11), (1, 0)])
def test_random_infeasible_edge_counts(n, m):
    with pytest.raises(ValueError):
        build_random(n, m, seed=1)


def test_validate_flags_disconnected():
    topo = Topology(node_count=4, edges=((0, 1), (1, 2)))  # node 3 isolated
    assert any("disconnected" in p for p in validate(topo))


def test_validate_flags_duplicate_edge():
    topo = Topology(node_count=3, edges=((0, 1), (1, 0), (1, 2)))
    assert any("duplicate edge" in p for p in validate(topo))


def test_validate_flags_self_loop_and_capacity():
    topo = Topology(node_count=3, edges=((0, 0), (0, 1), (1, 2)), capacity=0.0)
    problems = validate(topo)
    assert any("self-loop" in p for p in problems)
    assert any("capacity" in p for p in problems)


def test_topology_file_roundtrip(tmp_path):
    path = tmp_path / "topo.txt"
    path.write_text("3 3\n0 1\n1 2\n0 2\n")
    topo = load_topology(str(path))
    assert topo.node_count == 3
    assert set(topo.edges) == {(0, 1), (0, 2), (1, 2)}


def test_topology_file_rejects_bad_counts(tmp_path):
    path = tmp_path / "topo.txt"
    path.write_text("3 2\n0 1\n")
    with pytest.raises(ValueError, match="expected 2 edge lines"):
        load_topology(str(path))


def test_topology_file_rejects_invalid_graph(tmp_path):
    path = tmp_path / "topo.txt"
    path.write_text("4 2\n0 1\n2 3\n")
    with pytest.raises(ValueError, match="disconnected"):
        load_topology(str(path))


def test_spec_resolution(tmp_path):
    assert topologies_from_spec("gscale", seed=1).node_count == 12
    assert topologies_from_spec("random:10,20", seed=3).edge_count == 20
    path = tmp_path / "t.txt"
    path.write_text("2 1\n0 1\n")
    assert topologies_from_spec(f"file:{path}", seed=1).edge_count == 1
    with pytest.raises(ValueError):
        topologies_from_spec("mesh", seed=1)
