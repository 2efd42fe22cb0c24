"""End-to-end engine runs: determinism, invariants across schemes, FCFS
promise stability, and equivalence of the two P2P-SRPT execution paths."""

import pytest

from dccast_sim.engine import SCHEMES, simulate
from dccast_sim.topology import Topology
from dccast_sim.workload import WorkloadSpec, generate


@pytest.fixture(scope="module")
def small_workload(gscale):
    return generate(WorkloadSpec(arrival_rate=0.6, copies=3, last_arrival=40, seed=13), gscale)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_every_scheme_completes_all_requests(gscale, small_workload, scheme):
    result = simulate(gscale, small_workload, scheme, seed=13)
    assert len(result.completions) == len(small_workload)
    for rid, (arrival, completion) in result.completions.items():
        assert completion > arrival


@pytest.mark.parametrize("scheme", SCHEMES)
def test_determinism_across_runs(gscale, small_workload, scheme):
    a = simulate(gscale, small_workload, scheme, seed=13)
    b = simulate(gscale, small_workload, scheme, seed=13)
    assert a.completions == b.completions
    assert a.accumulator.total_bandwidth == b.accumulator.total_bandwidth


def test_bandwidth_identity_for_fixed_tree_schemes(gscale, small_workload):
    # Total bandwidth must equal sum(volume x tree edges) for every scheme
    # that fixes one tree per request.
    volumes = {r.id: r.volume for r in small_workload}
    for scheme in ("DCCAST", "MINMAX", "RANDOM", "BATCHING"):
        result = simulate(gscale, small_workload, scheme, seed=13)
        identity = sum(volumes[rid] * tree.edge_count for rid, tree in result.trees.items())
        assert result.accumulator.total_bandwidth == pytest.approx(identity, abs=1e-6)


def test_fcfs_promise_stability_holds(gscale, small_workload):
    # The engine raises InvariantViolation when a realized completion differs
    # from the slot promised at allocation. Cross-check against the retained
    # schedules: the final schedule of each tree request must be the original
    # promise (never replaced), and its completion must match the recorded one.
    for scheme in ("DCCAST", "MINMAX", "RANDOM", "BATCHING"):
        result = simulate(gscale, small_workload, scheme, seed=13)
        for rid, (_arrival, completion) in result.completions.items():
            assert result.schedules[rid].completion_slot == completion


def test_batching_delays_to_window_boundary(gscale):
    requests = generate(WorkloadSpec(arrival_rate=0.5, copies=2, last_arrival=9, seed=4), gscale)
    result = simulate(gscale, requests, "BATCHING", batch_window=5, seed=4)
    for rid, sched in result.schedules.items():
        arrival = next(r.arrival_slot for r in requests if r.id == rid)
        boundary = ((arrival + 4) // 5) * 5
        assert min(sched.rates) >= boundary + 1


def test_srpt_mean_tct_not_worse_than_fcfs(gscale):
    # Preemptive reordering should help (or at least not hurt) mean TCT on a
    # congested single-bottleneck workload.
    topo = Topology(node_count=2, edges=((0, 1),))
    requests = generate(WorkloadSpec(arrival_rate=0.8, copies=1, last_arrival=30, seed=21), topo)
    fcfs = simulate(topo, requests, "DCCAST", seed=21)
    srpt = simulate(topo, requests, "SRPT", seed=21)

    def mean_tct(result):
        return sum(c - a for a, c in result.completions.values()) / len(result.completions)

    assert mean_tct(srpt) <= mean_tct(fcfs) + 1e-9


def test_p2p_fast_matches_generic_reschedules(gscale):
    for copies, seed in ((1, 5), (2, 6), (3, 7)):
        requests = generate(
            WorkloadSpec(arrival_rate=0.8, copies=copies, last_arrival=35, seed=seed), gscale
        )
        fast = simulate(gscale, requests, "P2P-SRPT", k_paths=3, fast_srpt=True)
        slow = simulate(gscale, requests, "P2P-SRPT", k_paths=3, fast_srpt=False)
        assert fast.completions == slow.completions
        assert fast.accumulator.total_bandwidth == pytest.approx(
            slow.accumulator.total_bandwidth, abs=1e-6
        )


def test_single_destination_k1_matches_dccast_completions(gscale):
    # With one destination and K=1 both schemes degenerate to shortest-path
    # water-filling; completions must coincide when trees pick the same paths,
    # which unit capacities and hop-minimal paths guarantee on a path graph.
    topo = Topology(node_count=3, edges=((0, 1), (1, 2)))
    requests = generate(WorkloadSpec(arrival_rate=0.7, copies=1, last_arrival=25, seed=3), topo)
    tree_run = simulate(topo, requests, "DCCAST", seed=3)
    p2p_run = simulate(topo, requests, "P2P-FCFS", k_paths=1, seed=3)
    assert tree_run.completions == p2p_run.completions


def test_p2p_with_four_paths_uses_lp_fallback(gscale):
    # k_paths > 3 leaves the closed-form split; the per-slot LP must carry
    # both P2P schemes end to end with all run invariants intact.
    requests = generate(WorkloadSpec(arrival_rate=0.6, copies=2, last_arrival=12, seed=2), gscale)
    for scheme in ("P2P-FCFS", "P2P-SRPT"):
        result = simulate(gscale, requests, scheme, k_paths=4, seed=2)
        assert len(result.completions) == len(requests)


def test_rejects_unknown_scheme(gscale, small_workload):
    with pytest.raises(ValueError, match="unknown scheme"):
        simulate(gscale, small_workload, "FAIR")


def test_rejects_empty_workload(gscale):
    with pytest.raises(ValueError, match="empty"):
        simulate(gscale, [], "DCCAST")
