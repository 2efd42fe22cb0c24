"""Slotted-timeline scheduling core.

State model: every directed arc has a residual-bandwidth row over absolute
timeslots (volume-units per second; full capacity until booked) plus a load
ledger entry holding the total volume booked in future slots. Allocation
walks slots from the slot after arrival, sending at the bottleneck residual
until the request volume is exhausted; already-placed schedules are never
modified by later arrivals (except under the SRPT variant, which explicitly
clears and rebuilds all future bookings on each arrival).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import ratealloc
from .steiner import (
    ForwardingTree,
    WeightedView,
    bottleneck_steiner_tree,
    min_weight_steiner_tree,
    random_tree,
)
from .topology import Topology

VOLUME_EPS = 1e-9
RATE_EPS = ratealloc.RATE_EPS


class InvariantViolation(AssertionError):
    """A scheduling invariant (capacity, conservation, ledger) was broken."""


@dataclass(frozen=True)
class TransferRequest:
    id: int
    volume: float
    source: int
    destinations: frozenset[int]
    arrival_slot: int

    def __post_init__(self):
        object.__setattr__(self, "destinations", frozenset(self.destinations))
        if self.volume <= 0:
            raise ValueError("volume must be positive")
        if not self.destinations:
            raise ValueError("destination set must be non-empty")
        if self.source in self.destinations:
            raise ValueError("source must not be a destination")


class TransmissionSchedule:
    """Booked rates for one transfer.

    Tree schedules carry one rate row applied to every tree arc; multi-path
    schedules carry one row per path. Column 0 is `start_slot`.
    """

    __slots__ = (
        "key", "volume", "start_slot", "completion_slot", "tree", "paths",
        "rate_rows", "arc_rows_by_path", "arc_count", "hops", "delivered",
        "_nonzero", "_nz_idx", "generation",
    )

    def __init__(self, key, volume, start_slot, rate_rows, *, tree=None, paths=None,
                 arc_rows_by_path=None):
        self.key = key
        self.volume = volume
        self.start_slot = start_slot
        self.tree = tree
        self.paths = paths
        self.rate_rows = rate_rows
        self.arc_rows_by_path = arc_rows_by_path
        if tree is not None:
            self.arc_count = tree.edge_count
            self.hops = None
        else:
            self.arc_count = None
            self.hops = np.array([len(p) - 1 for p in paths], dtype=float)
        totals = rate_rows.sum(axis=0)
        nz = np.flatnonzero(totals > RATE_EPS)
        if nz.size == 0:
            raise InvariantViolation(f"schedule for {key} carries no traffic")
        self._nonzero = nz
        self._nz_idx = 0
        self.completion_slot = start_slot + int(nz[-1])
        self.delivered = 0.0
        self.generation = 0

    def rate_at(self, slot: int) -> float:
        off = slot - self.start_slot
        if off < 0 or off >= self.rate_rows.shape[1]:
            return 0.0
        return float(self.rate_rows[:, off].sum())

    def path_rates_at(self, slot: int) -> np.ndarray:
        return self.rate_rows[:, slot - self.start_slot]

    def arc_volume_at(self, slot: int, slot_seconds: float) -> float:
        off = slot - self.start_slot
        if off < 0 or off >= self.rate_rows.shape[1]:
            return 0.0
        if self.tree is not None:
            return float(self.rate_rows[0, off]) * self.arc_count * slot_seconds
        return float((self.rate_rows[:, off] * self.hops).sum()) * slot_seconds

    def next_active_slot(self, after: int) -> int | None:
        """Earliest slot > after with positive rate (moving cursor)."""
        target = after + 1 - self.start_slot
        nz = self._nonzero
        while self._nz_idx < nz.size and nz[self._nz_idx] < target:
            self._nz_idx += 1
        if self._nz_idx >= nz.size:
            return None
        return self.start_slot + int(nz[self._nz_idx])

    @property
    def rates(self) -> dict[int, float]:
        """Timeslot -> aggregate sending rate, positive entries only."""
        totals = self.rate_rows.sum(axis=0)
        return {
            self.start_slot + int(i): float(totals[i])
            for i in np.flatnonzero(totals > RATE_EPS)
        }

    def residual_volume(self) -> float:
        return self.volume - self.delivered


@dataclass
class DispatchOrder:
    key: object
    rate: float
    arc_volume: float


class LinkState:
    """Residual-bandwidth matrix (arcs x absolute slots) plus the load ledger."""

    def __init__(self, topology: Topology, slot_seconds: float = 1.0, start_slot: int = 0):
        self.topology = topology
        self.slot_seconds = slot_seconds
        self.cap_rate = topology.capacity / slot_seconds
        arcs = topology.arcs()
        self.arc_rows = {a: i for i, a in enumerate(arcs)}
        self.n_arcs = len(arcs)
        self.now = start_slot
        self._horizon = 512
        self.residual = np.full((self.n_arcs, self._horizon), self.cap_rate)
        self.load = np.zeros(self.n_arcs)
        self.first_free = np.full(self.n_arcs, start_slot + 1, dtype=np.int64)
        self.last_booked = np.full(self.n_arcs, start_slot, dtype=np.int64)
        self.active: dict = {}
        self._dispatch_heap: list[tuple[int, int, object, int]] = []
        self._heap_seq = 0
        self._generations: dict = {}
        self._completed: list[TransmissionSchedule] = []
        # edge -> (row forward, row reverse), aligned with topology.edges
        self._edge_dir_rows = np.array(
            [[self.arc_rows[(u, v)], self.arc_rows[(v, u)]] for u, v in topology.edges]
        )

    def ensure(self, slot: int) -> None:
        if slot < self._horizon:
            return
        new_h = self._horizon
        while new_h <= slot:
            new_h *= 2
        grown = np.full((self.n_arcs, new_h), self.cap_rate)
        grown[:, : self._horizon] = self.residual
        self.residual = grown
        self._horizon = new_h

    def rows_for_arcs(self, arcs) -> np.ndarray:
        return np.fromiter((self.arc_rows[a] for a in arcs), dtype=np.int64, count=len(arcs))

    def edge_selection_weights(self, volume: float) -> np.ndarray:
        """Tree-selection weights: worst-direction booked load plus the new volume."""
        dir_loads = self.load[self._edge_dir_rows]
        return dir_loads.max(axis=1) + volume

    def check_capacity_slice(self, rows: np.ndarray, start: int, stop: int) -> None:
        block = self.residual[rows, start:stop]
        low = float(block.min(initial=0.0))
        if low < -1e-9:
            raise InvariantViolation(f"arc capacity exceeded by {-low}")
        if low < 0.0:
            self.residual[rows, start:stop] = np.clip(block, 0.0, None)

    def refresh_first_free(self, rows: np.ndarray, upto: int) -> None:
        self.ensure(upto + 1)
        for r in rows:
            ff = int(self.first_free[r])
            if ff > upto:
                continue
            seg = self.residual[r, ff : upto + 2]
            idx = np.flatnonzero(seg > RATE_EPS)
            self.first_free[r] = ff + int(idx[0]) if idx.size else upto + 2

    def register(self, sched: TransmissionSchedule) -> None:
        first = sched.next_active_slot(self.now)
        if first is None:
            raise InvariantViolation(f"schedule for {sched.key} has no future traffic")
        gen = self._generations.get(sched.key, 0) + 1
        self._generations[sched.key] = gen
        sched.generation = gen
        self.active[sched.key] = sched
        self._heap_seq += 1
        heapq.heappush(self._dispatch_heap, (first, self._heap_seq, sched.key, gen))

    def drop_schedule(self, key) -> TransmissionSchedule:
        return self.active.pop(key)

    def pop_completions(self) -> list[TransmissionSchedule]:
        out = self._completed
        self._completed = []
        return out

    def clamp_load(self) -> None:
        low = float(self.load.min(initial=0.0))
        if low < -1e-6:
            raise InvariantViolation(f"load ledger went negative by {-low}")
        if low < 0.0:
            np.clip(self.load, 0.0, None, out=self.load)

    def check_ledger(self) -> float:
        """Max deviation between L_e and the residual-map recomputation."""
        future = self.residual[:, self.now + 1 :]
        recomputed = (self.cap_rate - future).sum(axis=1) * self.slot_seconds
        return float(np.abs(recomputed - self.load).max(initial=0.0))


# -- fill primitives -----------------------------------------------------------


def _cut_at_volume(m: np.ndarray, free_rate: float, v_rate: float):
    """Extend a windowed rate profile with an all-free tail and cut it where
    the cumulative rate reaches v_rate. Returns (rates, final_index)."""
    if m.size:
        cum = np.cumsum(m)
        have = float(cum[-1])
    else:
        cum = np.zeros(0)
        have = 0.0
    if have >= v_rate - RATE_EPS:
        idx = int(np.searchsorted(cum, v_rate - RATE_EPS))
        rates = m[: idx + 1].copy()
    else:
        if free_rate <= RATE_EPS:
            raise InvariantViolation("no usable capacity beyond the booked horizon")
        extra = int(np.ceil((v_rate - have) / free_rate - 1e-12))
        rates = np.concatenate([m, np.full(extra, free_rate)])
        cum = np.cumsum(rates)
        idx = int(np.searchsorted(cum, v_rate - RATE_EPS))
        rates = rates[: idx + 1].copy()
    prior = float(cum[idx - 1]) if idx > 0 else 0.0
    rates[-1] = max(v_rate - prior, 0.0)
    return rates, idx


def fill_tree(
    state: LinkState, key, tree: ForwardingTree, volume: float, not_before: int
) -> TransmissionSchedule:
    """Earliest-finish schedule of `volume` over the tree's outward arcs."""
    rows = state.rows_for_arcs(tree.arcs_from_root())
    start = max(int(state.first_free[rows].max()), not_before)
    frontier = max(int(state.last_booked[rows].max()) + 1, start)
    state.ensure(frontier + 1)
    window = state.residual[rows, start:frontier]
    m = window.min(axis=0) if window.size else np.zeros(0)
    m = np.where(m > RATE_EPS, m, 0.0)
    rates, _ = _cut_at_volume(m, state.cap_rate, volume / state.slot_seconds)
    end = start + rates.size  # exclusive
    state.ensure(end)
    state.residual[rows[:, None], np.arange(start, end)[None, :]] -= rates[None, :]
    state.check_capacity_slice(rows, start, end)
    state.load[rows] += rates.sum() * state.slot_seconds
    state.last_booked[rows] = np.maximum(state.last_booked[rows], end - 1)
    state.refresh_first_free(rows, end - 1)
    sched = TransmissionSchedule(key, volume, start, rates[None, :], tree=tree)
    state.register(sched)
    return sched


def fill_paths(
    state: LinkState, key, paths: tuple[tuple[int, ...], ...], volume: float, not_before: int
) -> TransmissionSchedule:
    """Earliest-finish multi-path schedule, per-slot optimal across the paths."""
    n_paths = len(paths)
    path_rows = [state.rows_for_arcs(list(zip(p, p[1:]))) for p in paths]
    all_rows = np.unique(np.concatenate(path_rows))

    start = max(
        not_before,
        min(int(state.first_free[rows].max()) for rows in path_rows),
    )
    frontier = max(int(state.last_booked[all_rows].max()) + 1, start)
    state.ensure(frontier + 1)
    window = state.residual[:, start:frontier]

    if n_paths <= 3:
        row_mask: dict[int, int] = {}
        for p_idx, rows in enumerate(path_rows):
            for r in rows:
                row_mask[int(r)] = row_mask.get(int(r), 0) | (1 << p_idx)
        groups = [np.array([], dtype=np.int64) for _ in range(1 << n_paths)]
        by_bm: dict[int, list[int]] = {}
        for r, bm in row_mask.items():
            by_bm.setdefault(bm, []).append(r)
        for bm, rws in by_bm.items():
            groups[bm] = np.array(sorted(rws), dtype=np.int64)
        caps = ratealloc.pattern_caps(window, groups, n_paths)
        m, x = ratealloc.max_rate_and_split(caps, n_paths)
        free_caps = np.full((1 << n_paths, 1), np.inf)
        for bm in range(1, 1 << n_paths):
            if groups[bm].size:
                free_caps[bm] = state.cap_rate
        m_free_arr, x_free_arr = ratealloc.max_rate_and_split(free_caps, n_paths)
    else:
        usage = np.zeros((all_rows.size, n_paths))
        pos = {int(r): i for i, r in enumerate(all_rows)}
        for p_idx, rows in enumerate(path_rows):
            for r in rows:
                usage[pos[int(r)], p_idx] = 1.0
        m, x = ratealloc.lp_rate_and_split(usage, window[all_rows])
        m_free_arr, x_free_arr = ratealloc.lp_rate_and_split(
            usage, np.full((all_rows.size, 1), state.cap_rate)
        )
    x_free = x_free_arr[:, 0]
    m_free = float(x_free.sum())

    v_rate = volume / state.slot_seconds
    totals = x.sum(axis=0)
    if totals.size:
        cum = np.cumsum(totals)
        have = float(cum[-1])
    else:
        cum = np.zeros(0)
        have = 0.0
    if have >= v_rate - RATE_EPS:
        idx = int(np.searchsorted(cum, v_rate - RATE_EPS))
        rate_rows = x[:, : idx + 1].copy()
    else:
        if m_free <= RATE_EPS:
            raise InvariantViolation("paths carry no capacity")
        extra = int(np.ceil((v_rate - have) / m_free - 1e-12))
        rate_rows = np.concatenate([x, np.tile(x_free[:, None], (1, extra))], axis=1)
        cum = np.cumsum(np.concatenate([totals, np.full(extra, m_free)]))
        idx = int(np.searchsorted(cum, v_rate - RATE_EPS))
        rate_rows = rate_rows[:, : idx + 1].copy()
    prior = float(cum[idx - 1]) if idx > 0 else 0.0
    needed = max(v_rate - prior, 0.0)
    # Shed the final slot's surplus from the longest paths first.
    excess = float(rate_rows[:, -1].sum()) - needed
    for p_idx in range(n_paths - 1, -1, -1):
        if excess <= 0.0:
            break
        take = min(float(rate_rows[p_idx, -1]), excess)
        rate_rows[p_idx, -1] -= take
        excess -= take

    end = start + rate_rows.shape[1]
    state.ensure(end)
    span = np.arange(start, end)
    for p_idx, rows in enumerate(path_rows):
        state.residual[rows[:, None], span[None, :]] -= rate_rows[p_idx][None, :]
        state.load[rows] += rate_rows[p_idx].sum() * state.slot_seconds
    state.check_capacity_slice(all_rows, start, end)
    state.last_booked[all_rows] = np.maximum(state.last_booked[all_rows], end - 1)
    state.refresh_first_free(all_rows, end - 1)
    sched = TransmissionSchedule(
        key, volume, start, rate_rows,
        paths=tuple(tuple(p) for p in paths), arc_rows_by_path=path_rows,
    )
    state.register(sched)
    return sched


def unbook(state: LinkState, sched: TransmissionSchedule) -> float:
    """Remove a schedule's future bookings; returns its undelivered volume."""
    future_from = max(sched.start_slot, state.now + 1)
    length = sched.rate_rows.shape[1]
    off = future_from - sched.start_slot
    if off < length:
        span = np.arange(future_from, sched.start_slot + length)
        if sched.tree is not None:
            rows = state.rows_for_arcs(sched.tree.arcs_from_root())
            state.residual[rows[:, None], span[None, :]] += sched.rate_rows[0, off:][None, :]
            state.load[rows] -= sched.rate_rows[0, off:].sum() * state.slot_seconds
            state.first_free[rows] = np.minimum(state.first_free[rows], future_from)
        else:
            for p_idx, rows in enumerate(sched.arc_rows_by_path):
                state.residual[rows[:, None], span[None, :]] += sched.rate_rows[p_idx, off:][None, :]
                state.load[rows] -= sched.rate_rows[p_idx, off:].sum() * state.slot_seconds
                state.first_free[rows] = np.minimum(state.first_free[rows], future_from)
    return sched.residual_volume()


def clear_all_future(state: LinkState) -> list[tuple[TransmissionSchedule, float]]:
    """Unbook every active schedule (SRPT preamble) and reset booking frontiers."""
    dropped = []
    for key in sorted(state.active.keys()):
        sched = state.active[key]
        dropped.append((sched, unbook(state, sched)))
    for sched, _ in dropped:
        state.drop_schedule(sched.key)
    state.last_booked[:] = state.now
    state.clamp_load()
    return dropped


# -- public operations ----------------------------------------------------------


def select_tree(
    state: LinkState, request_volume: float, root: int, terminals: frozenset[int],
    strategy: str, rng_token: int = 0,
) -> ForwardingTree:
    topo = state.topology
    if strategy == "RANDOM":
        return random_tree(topo, root, terminals, seed=rng_token)
    view = WeightedView(topo, state.edge_selection_weights(request_volume))
    if strategy == "MINMAX":
        return bottleneck_steiner_tree(view, root, terminals)
    return min_weight_steiner_tree(view, root, terminals)


def allocate(
    request: TransferRequest, state: LinkState, strategy: str = "DCCAST", rng_token: int = 0
) -> tuple[ForwardingTree, TransmissionSchedule]:
    """Pick a forwarding tree and book the request's earliest-finish schedule
    starting the slot after arrival. Existing schedules are untouched."""
    if request.arrival_slot != state.now:
        raise ValueError("allocate must run during the request's arrival slot")
    tree = select_tree(
        state, request.volume, request.source, request.destinations, strategy, rng_token
    )
    sched = fill_tree(state, request.id, tree, request.volume, state.now + 1)
    return tree, sched


def update(state: LinkState, now: int) -> list[DispatchOrder]:
    """Advance to slot `now`: emit every active transfer's rate for the slot,
    deduct the slot's traffic from the load ledger, and retire the slot."""
    if now <= state.now:
        raise ValueError("timeslots must strictly increase across update calls")
    state.ensure(now + 1)
    cols = state.residual[:, state.now + 1 : now + 1]
    state.load -= (state.cap_rate - cols).sum(axis=1) * state.slot_seconds
    state.clamp_load()
    state.now = now
    np.maximum(state.first_free, now + 1, out=state.first_free)
    np.maximum(state.last_booked, now, out=state.last_booked)

    dispatches: list[DispatchOrder] = []
    heap = state._dispatch_heap
    repush: list[tuple[int, object, int]] = []
    while heap and heap[0][0] <= now:
        slot, _, key, gen = heapq.heappop(heap)
        sched = state.active.get(key)
        if sched is None or sched.generation != gen:
            continue  # superseded by a reschedule
        if slot < now:
            nxt = sched.next_active_slot(now - 1)
            if nxt is None:
                continue
            if nxt > now:
                repush.append((nxt, key, gen))
                continue
        rate = sched.rate_at(now)
        if rate > RATE_EPS:
            sched.delivered += rate * state.slot_seconds
            dispatches.append(
                DispatchOrder(key, rate, sched.arc_volume_at(now, state.slot_seconds))
            )
        if sched.completion_slot <= now:
            state.drop_schedule(key)
            state._completed.append(sched)
        else:
            nxt = sched.next_active_slot(now)
            if nxt is not None:
                repush.append((nxt, key, gen))
    for slot, key, gen in repush:
        state._heap_seq += 1
        heapq.heappush(heap, (slot, state._heap_seq, key, gen))
    dispatches.sort(key=lambda d: d.key)
    return dispatches


def srpt_reschedule(
    state: LinkState,
    arrivals: dict,
    new_request: TransferRequest | None = None,
) -> dict:
    """Clear all future tree bookings and rebuild them in ascending-residual
    order, re-selecting every forwarding tree with fresh load weights."""
    dropped = clear_all_future(state)
    entries = []
    for sched, residual in dropped:
        if residual > VOLUME_EPS:
            entries.append((residual, arrivals[sched.key], sched.key, None, sched))
    if new_request is not None:
        entries.append(
            (new_request.volume, new_request.arrival_slot, new_request.id, new_request, None)
        )
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    out = {}
    for residual, _arrival, key, req, old in entries:
        if req is not None:
            root, dests = req.source, req.destinations
        else:
            root, dests = old.tree.root, old.tree.terminals
        tree = select_tree(state, residual, root, dests, "DCCAST")
        out[key] = fill_tree(state, key, tree, residual, state.now + 1)
    return out


def batch_schedule(
    state: LinkState, batch: list[TransferRequest], boundary_slot: int
) -> dict:
    """Shortest-job-first allocation of a batch at its window boundary."""
    out = {}
    for req in sorted(batch, key=lambda r: (r.volume, r.arrival_slot, r.id)):
        tree = select_tree(state, req.volume, req.source, req.destinations, "DCCAST")
        out[req.id] = fill_tree(state, req.id, tree, req.volume, boundary_slot + 1)
    return out
