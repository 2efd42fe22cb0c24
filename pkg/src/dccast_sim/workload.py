"""Synthetic traffic: Poisson arrivals per slot, constant-plus-exponential
demand volumes, endpoints uniform over the topology.

Three independent RNG sub-streams (arrival counts, volumes, endpoints) keep
paired comparisons stable: changing the destination count re-draws endpoints
without perturbing arrival times or volumes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .scheduler import TransferRequest
from .topology import Topology


@dataclass(frozen=True)
class WorkloadSpec:
    arrival_rate: float = 1.0       # requests per slot
    demand_constant: float = 10.0   # volume floor
    demand_mean: float = 20.0       # exponential part
    copies: int = 1                 # destinations per request
    last_arrival: int = 500
    seed: int = 1

    def __post_init__(self):
        if self.arrival_rate <= 0:
            raise ValueError("arrival rate must be > 0")
        if self.demand_constant < 0 or self.demand_mean <= 0:
            raise ValueError("bad demand parameters")
        if self.copies < 1:
            raise ValueError("copies must be >= 1")
        if self.last_arrival < 1:
            raise ValueError("last_arrival must be >= 1")


def generate(spec: WorkloadSpec, topology: Topology) -> list[TransferRequest]:
    """Deterministic request list for (spec, topology); arrivals in slots
    1..last_arrival, processed in id order within a slot."""
    n = topology.node_count
    if spec.copies >= n:
        raise ValueError(f"copies={spec.copies} needs at least {spec.copies + 1} nodes")
    counts_rng, volume_rng, endpoint_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(3)
    )
    counts = counts_rng.poisson(spec.arrival_rate, size=spec.last_arrival)
    requests: list[TransferRequest] = []
    rid = 0
    for slot_idx, count in enumerate(counts, start=1):
        for _ in range(int(count)):
            volume = spec.demand_constant + float(volume_rng.exponential(spec.demand_mean))
            source = int(endpoint_rng.integers(n))
            others = np.delete(np.arange(n), source)
            dests = endpoint_rng.choice(others, size=spec.copies, replace=False)
            requests.append(
                TransferRequest(
                    id=rid,
                    volume=volume,
                    source=source,
                    destinations=frozenset(int(d) for d in dests),
                    arrival_slot=slot_idx,
                )
            )
            rid += 1
    return requests


WORKLOAD_HEADER = ["id", "arrival_slot", "volume", "source", "destinations"]


def dump_workload(path: str, requests: list[TransferRequest]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WORKLOAD_HEADER)
        for r in requests:
            writer.writerow(
                [r.id, r.arrival_slot, repr(r.volume), r.source,
                 ";".join(str(d) for d in sorted(r.destinations))]
            )


def load_workload(path: str) -> list[TransferRequest]:
    out: list[TransferRequest] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != WORKLOAD_HEADER:
            raise ValueError(f"{path}: expected header {','.join(WORKLOAD_HEADER)}")
        for row in reader:
            if not row:
                continue
            rid, arrival, volume, source, dests = row
            out.append(
                TransferRequest(
                    id=int(rid),
                    volume=float(volume),
                    source=int(source),
                    destinations=frozenset(int(d) for d in dests.split(";")),
                    arrival_slot=int(arrival),
                )
            )
    out.sort(key=lambda r: (r.arrival_slot, r.id))
    return out
