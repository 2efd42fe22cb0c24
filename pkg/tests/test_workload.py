import pytest

from dccast_sim.workload import WorkloadSpec, dump_workload, generate, load_workload


def test_volume_floor_and_mean(gscale):
    spec = WorkloadSpec(arrival_rate=1.0, copies=6, last_arrival=500, seed=42)
    requests = generate(spec, gscale)
    assert len(requests) >= 400
    volumes = [r.volume for r in requests]
    assert min(volumes) >= 10.0
    mean = sum(volumes) / len(volumes)
    assert 28.0 <= mean <= 32.0


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_request_count_within_poisson_bounds(gscale, seed):
    # 3.5 sigma around Poisson(500): [420, 580].
    requests = generate(WorkloadSpec(last_arrival=500, seed=seed), gscale)
    assert 420 <= len(requests) <= 580


def test_single_copy_requests(gscale):
    requests = generate(WorkloadSpec(copies=1, last_arrival=50, seed=5), gscale)
    for r in requests:
        assert len(r.destinations) == 1
        assert r.source not in r.destinations


def test_copies_distinct_and_source_excluded(gscale):
    requests = generate(WorkloadSpec(copies=6, last_arrival=50, seed=5), gscale)
    for r in requests:
        assert len(r.destinations) == 6
        assert r.source not in r.destinations


def test_determinism_and_seed_sensitivity(gscale):
    a = generate(WorkloadSpec(last_arrival=60, seed=9), gscale)
    b = generate(WorkloadSpec(last_arrival=60, seed=9), gscale)
    c = generate(WorkloadSpec(last_arrival=60, seed=10), gscale)
    assert [(r.arrival_slot, r.volume, r.source) for r in a] == [
        (r.arrival_slot, r.volume, r.source) for r in b
    ]
    assert [r.volume for r in a] != [r.volume for r in c]


def test_copies_change_keeps_volumes_and_arrivals(gscale):
    # Stream separation: sweeping the destination count must not perturb the
    # paired arrival/volume draws.
    one = generate(WorkloadSpec(copies=1, last_arrival=80, seed=3), gscale)
    six = generate(WorkloadSpec(copies=6, last_arrival=80, seed=3), gscale)
    assert [r.volume for r in one] == [r.volume for r in six]
    assert [r.arrival_slot for r in one] == [r.arrival_slot for r in six]


def test_arrival_slots_in_range(gscale):
    requests = generate(WorkloadSpec(last_arrival=30, seed=1), gscale)
    assert all(1 <= r.arrival_slot <= 30 for r in requests)
    assert [r.id for r in requests] == list(range(len(requests)))


def test_copies_bounded_by_node_count(gscale):
    with pytest.raises(ValueError):
        generate(WorkloadSpec(copies=12, last_arrival=10, seed=1), gscale)


def test_spec_validation():
    with pytest.raises(ValueError):
        WorkloadSpec(arrival_rate=0.0)
    with pytest.raises(ValueError):
        WorkloadSpec(copies=0)
    with pytest.raises(ValueError):
        WorkloadSpec(demand_mean=0.0)


def test_dump_load_roundtrip(tmp_path, gscale):
    requests = generate(WorkloadSpec(copies=3, last_arrival=40, seed=8), gscale)
    path = tmp_path / "wl.csv"
    dump_workload(str(path), requests)
    loaded = load_workload(str(path))
    assert len(loaded) == len(requests)
    for a, b in zip(requests, loaded):
        assert (a.id, a.arrival_slot, a.source, a.destinations) == (
            b.id, b.arrival_slot, b.source, b.destinations
        )
        assert a.volume == b.volume  # repr() roundtrips doubles exactly


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,arrival,volume\n")
    with pytest.raises(ValueError, match="header"):
        load_workload(str(path))
