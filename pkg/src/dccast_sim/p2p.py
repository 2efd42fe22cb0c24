"""Point-to-point baselines: each multi-destination request becomes one
independent unicast transfer per destination, routed over the K shortest
paths with per-slot optimal rate allocation across those paths.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .scheduler import LinkState, TransmissionSchedule, VOLUME_EPS, clear_all_future, fill_paths
from .topology import Topology


@dataclass(frozen=True)
class UnicastTransfer:
    parent_id: int
    copy_index: int
    volume: float
    source: int
    destination: int
    arrival_slot: int
    paths: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.paths:
            raise ValueError("a unicast transfer needs at least one path")
        for p in self.paths:
            if p[0] != self.source or p[-1] != self.destination:
                raise ValueError(f"path {p} does not connect {self.source}->{self.destination}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.parent_id, self.copy_index)


def k_shortest_paths(
    topology: Topology, source: int, destination: int, k: int
) -> list[tuple[int, ...]]:
    """K shortest simple paths by hop count, ties by lexicographic node order.

    Best-first enumeration over partial paths keyed by (hops, node sequence);
    complete paths therefore pop in exactly the required order. Returns fewer
    than k paths when the graph holds fewer simple paths.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if source == destination:
        raise ValueError("source and destination must differ")
    heap: list[tuple[int, tuple[int, ...]]] = [(0, (source,))]
    found: list[tuple[int, ...]] = []
    while heap and len(found) < k:
        hops, path = heapq.heappop(heap)
        last = path[-1]
        if last == destination:
            found.append(path)
            continue
        for nbr, _ in topology.neighbors(last):
            if nbr not in path:
                heapq.heappush(heap, (hops + 1, path + (nbr,)))
    return found


class PathCache:
    """Per-topology memo of k_shortest_paths results."""

    def __init__(self, topology: Topology, k: int):
        self.topology = topology
        self.k = k
        self._memo: dict[tuple[int, int], tuple[tuple[int, ...], ...]] = {}

    def paths(self, source: int, destination: int) -> tuple[tuple[int, ...], ...]:
        key = (source, destination)
        got = self._memo.get(key)
        if got is None:
            got = tuple(k_shortest_paths(self.topology, source, destination, self.k))
            self._memo[key] = got
        return got


def split_into_unicasts(request, cache: PathCache) -> list[UnicastTransfer]:
    """One copy per destination, copy indices in ascending destination order."""
    out = []
    for idx, dest in enumerate(sorted(request.destinations)):
        out.append(
            UnicastTransfer(
                parent_id=request.id,
                copy_index=idx,
                volume=request.volume,
                source=request.source,
                destination=dest,
                arrival_slot=request.arrival_slot,
                paths=cache.paths(request.source, dest),
            )
        )
    return out


def p2p_allocate(transfer: UnicastTransfer, state: LinkState) -> TransmissionSchedule:
    """Earliest-finish schedule over the transfer's path set; the completion
    slot is fixed here and later arrivals cannot move it (FCFS discipline)."""
    return fill_paths(
        state, transfer.key, transfer.paths, transfer.volume, state.now + 1
    )


def p2p_srpt_reschedule(
    state: LinkState,
    meta: dict,
    new_transfers: list[UnicastTransfer] | None = None,
) -> dict:
    """Clear every unicast booking and re-run allocation in ascending-residual
    order (ties: arrival slot, then parent id, then copy index).

    `meta` maps active schedule keys to their UnicastTransfer.
    """
    dropped = clear_all_future(state)
    entries = []
    for sched, residual in dropped:
        if residual > VOLUME_EPS:
            tr = meta[sched.key]
            entries.append((residual, tr.arrival_slot, tr.parent_id, tr.copy_index, tr))
    for tr in new_transfers or ():
        entries.append((tr.volume, tr.arrival_slot, tr.parent_id, tr.copy_index, tr))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    out = {}
    for residual, _arr, _pid, _ci, tr in entries:
        out[tr.key] = fill_paths(state, tr.key, tr.paths, residual, state.now + 1)
    return out
