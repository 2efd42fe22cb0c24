"""Built-in verification battery backing ``dccast-sim verify``.

Each check prints one PASS/FAIL line. These are desk-scale smoke oracles;
the pytest suite carries the full acceptance checks at their stated
tolerances.
"""

from __future__ import annotations

import random

import numpy as np

from . import ratealloc
from .engine import SCHEMES, simulate
from .p2p import k_shortest_paths
from .scheduler import LinkState, TransferRequest, allocate
from .steiner import WeightedView, exact_steiner_small, min_weight_steiner_tree
from .topology import Topology, build_gscale, build_random, validate
from .workload import WorkloadSpec, generate


def _check_topology() -> None:
    g = build_gscale()
    assert g.node_count == 12 and g.edge_count == 19, "gscale counts"
    assert validate(g) == [], "gscale invariants"
    assert min(len(g.neighbors(v)) for v in range(12)) >= 2, "gscale degrees"
    a = build_random(20, 40, seed=11)
    b = build_random(20, 40, seed=11)
    assert a.edges == b.edges, "random topology determinism"
    assert validate(a) == [], "random topology invariants"


def _check_steiner_oracle() -> None:
    for seed in range(10):
        topo = build_random(8, 14, seed=seed)
        rng = random.Random(1000 + seed)
        weights = np.array([rng.uniform(0.5, 10.0) for _ in topo.edges])
        view = WeightedView(topo, weights)
        nodes = list(range(8))
        rng.shuffle(nodes)
        root, terminals = nodes[0], frozenset(nodes[1:4])
        heur = min_weight_steiner_tree(view, root, terminals)
        exact = exact_steiner_small(view, root, terminals)
        assert heur.check_valid(topo) == [], f"invalid heuristic tree (seed {seed})"
        assert exact.check_valid(topo) == [], f"invalid exact tree (seed {seed})"
        hw, ew = heur.total_weight(view), exact.total_weight(view)
        assert hw <= 2.0 * ew + 1e-9, f"2x bound broken: {hw} vs {ew} (seed {seed})"


def _all_simple_paths(topo: Topology, s: int, d: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def dfs(path: list[int]) -> None:
        last = path[-1]
        if last == d:
            out.append(tuple(path))
            return
        for nbr, _ in topo.neighbors(last):
            if nbr not in path:
                path.append(nbr)
                dfs(path)
                path.pop()

    dfs([s])
    return sorted(out, key=lambda p: (len(p), p))


def _check_ksp_oracle() -> None:
    for seed in range(5):
        topo = build_random(8, 13, seed=100 + seed)
        rng = random.Random(seed)
        s = rng.randrange(8)
        d = (s + 1 + rng.randrange(7)) % 8
        if s == d:
            continue
        want = _all_simple_paths(topo, s, d)[:4]
        got = k_shortest_paths(topo, s, d, 4)
        assert got == want, f"ksp mismatch on seed {seed}: {got} vs {want}"


def _check_rate_split() -> None:
    from scipy.optimize import linprog

    rng = np.random.default_rng(42)
    for trial in range(40):
        n_paths = 1 + trial % 3
        caps = np.full((1 << n_paths, 4), np.inf)
        present = []
        for bm in range(1, 1 << n_paths):
            if rng.random() < 0.7 or bm.bit_count() == 1:
                caps[bm] = rng.uniform(0.05, 2.0, size=4)
                present.append(bm)
        m, x = ratealloc.max_rate_and_split(caps, n_paths)
        assert (x.sum(axis=0) <= m + 1e-9).all() and (x.sum(axis=0) >= m - 1e-9).all()
        for bm in present:
            used = sum(x[p] for p in range(n_paths) if bm >> p & 1)
            assert (used <= caps[bm] + 1e-9).all(), "pattern cap exceeded"
        # LP cross-check on each slot
        for j in range(4):
            a_ub, b_ub = [], []
            for bm in present:
                a_ub.append([1.0 if bm >> p & 1 else 0.0 for p in range(n_paths)])
                b_ub.append(caps[bm][j])
            res = linprog(
                -np.ones(n_paths), A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs"
            )
            assert res.success and abs(-res.fun - m[j]) < 1e-8, (
                f"rate LP mismatch: {-res.fun} vs {m[j]}"
            )


def _check_allocate_example() -> None:
    # Path S-A plus A-D1 and A-D2: a 4-unit transfer to both leaves runs at
    # rate 1.0 over 3 edges for 4 slots and consumes 12 volume-units.
    topo = Topology(node_count=4, edges=((0, 1), (1, 2), (1, 3)))
    state = LinkState(topo)
    state.now = 1
    req = TransferRequest(id=0, volume=4.0, source=0, destinations=frozenset({2, 3}), arrival_slot=1)
    tree, sched = allocate(req, state)
    assert tree.edge_count == 3, "figure tree size"
    assert sched.completion_slot == 5, "completion at arrival+4"
    assert sched.rates == {2: 1.0, 3: 1.0, 4: 1.0, 5: 1.0}, "unit rate per slot"
    total_arc_volume = 0.0
    for t in range(2, 6):
        total_arc_volume += sched.arc_volume_at(t, state.slot_seconds)
    assert abs(total_arc_volume - 12.0) < 1e-9, "bandwidth 12"


def _check_simulation_invariants() -> None:
    topo = build_gscale()
    spec = WorkloadSpec(arrival_rate=0.5, copies=2, last_arrival=40, seed=3)
    requests = generate(spec, topo)
    for scheme in SCHEMES:
        result = simulate(topo, requests, scheme, seed=3)
        assert result.ledger_deviation <= 1e-6, f"{scheme}: ledger deviates"
        if scheme in ("DCCAST", "MINMAX", "RANDOM", "BATCHING"):
            identity = sum(r.volume * result.trees[r.id].edge_count for r in requests)
            got = result.accumulator.total_bandwidth
            assert abs(identity - got) < 1e-6, f"{scheme}: bandwidth identity {got} vs {identity}"


CHECKS = [
    ("topology builders", _check_topology),
    ("steiner heuristic vs exact oracle", _check_steiner_oracle),
    ("k-shortest-paths vs enumeration", _check_ksp_oracle),
    ("per-slot rate split vs LP", _check_rate_split),
    ("allocate hand example", _check_allocate_example),
    ("simulation invariants (all schemes)", _check_simulation_invariants),
]


def run_battery() -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    return failures
