"""Run metrics: total bandwidth, mean/tail completion times, processing times.

Total bandwidth is the sum over slots and arcs of the traffic actually sent;
the accumulator ingests per-slot dispatch orders whose arc_volume field is
rate x slot width x number of arcs carrying it.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass


@dataclass(frozen=True)
class RunReport:
    scheme: str
    topology: str
    seed: int
    copies: int
    arrival_rate: float
    k_paths: int
    total_bandwidth: float
    mean_tct: float
    tail_tct_p99: float
    max_tct: float
    num_requests: int
    mean_alloc_ms: float
    mean_slot_ms: float


CSV_HEADER = [
    "scheme", "topology", "seed", "copies", "lambda", "k_paths",
    "total_bandwidth", "mean_tct", "tail_tct_p99", "max_tct",
    "num_requests", "mean_alloc_ms", "mean_slot_ms",
]


def nearest_rank(values: list[float], percentile: float) -> float:
    """Nearest-rank percentile (percentile in (0, 100])."""
    if not values:
        raise ValueError("no values")
    ordered = sorted(values)
    rank = max(1, math.ceil(percentile / 100.0 * len(ordered)))
    return ordered[rank - 1]


class MetricsAccumulator:
    """Per-run accumulator: feed each slot's dispatches, then completions."""

    def __init__(self, tail_percentile: float = 99.0):
        self.tail_percentile = tail_percentile
        self.total_bandwidth = 0.0
        self._tcts: list[float] = []
        self._volumes: list[float] = []
        self.alloc_seconds: list[float] = []
        self.slot_seconds_spent: list[float] = []

    def record(self, dispatches) -> None:
        self.total_bandwidth += sum(d.arc_volume for d in dispatches)

    def complete(self, arrival_slot: int, completion_slot: int, volume: float) -> None:
        tct = completion_slot - arrival_slot
        if tct <= 0:
            raise ValueError("completion must follow arrival")
        self._tcts.append(float(tct))
        self._volumes.append(volume)

    def report(
        self, *, scheme: str, topology: str, seed: int, copies: int,
        arrival_rate: float, k_paths: int, expected_requests: int,
    ) -> RunReport:
        if len(self._tcts) != expected_requests:
            raise ValueError(
                f"incomplete run: {len(self._tcts)} of {expected_requests} requests finished"
            )
        mean_tct = sum(self._tcts) / len(self._tcts)
        tail = nearest_rank(self._tcts, self.tail_percentile)
        peak = max(self._tcts)
        if self.total_bandwidth < sum(self._volumes) - 1e-6:
            raise ValueError("bandwidth accumulator below total delivered volume")
        if not (peak >= tail >= mean_tct > 0):
            raise ValueError("degenerate completion-time distribution")
        return RunReport(
            scheme=scheme,
            topology=topology,
            seed=seed,
            copies=copies,
            arrival_rate=arrival_rate,
            k_paths=k_paths,
            total_bandwidth=self.total_bandwidth,
            mean_tct=mean_tct,
            tail_tct_p99=tail,
            max_tct=peak,
            num_requests=expected_requests,
            mean_alloc_ms=1e3 * (sum(self.alloc_seconds) / len(self.alloc_seconds))
            if self.alloc_seconds else 0.0,
            mean_slot_ms=1e3 * (sum(self.slot_seconds_spent) / len(self.slot_seconds_spent))
            if self.slot_seconds_spent else 0.0,
        )


def normalize(values: list[float]) -> list[float]:
    """Divide by the minimum; every normalized value is >= 1."""
    lo = min(values)
    if lo <= 0:
        raise ValueError("normalization divisor must be positive")
    return [v / lo for v in values]


def report_row(r: RunReport) -> list[str]:
    return [
        r.scheme, r.topology, str(r.seed), str(r.copies),
        f"{r.arrival_rate:g}", str(r.k_paths),
        f"{r.total_bandwidth:.6f}", f"{r.mean_tct:.6f}",
        f"{r.tail_tct_p99:.6f}", f"{r.max_tct:.6f}",
        str(r.num_requests), f"{r.mean_alloc_ms:.4f}", f"{r.mean_slot_ms:.4f}",
    ]


def write_csv(path: str, reports: list[RunReport]) -> None:
    """Atomic write, rows sorted by (scheme, copies, seed)."""
    ordered = sorted(reports, key=lambda r: (r.scheme, r.copies, r.seed))
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in ordered:
                writer.writerow(report_row(r))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path: str) -> list[dict]:
    """Rows as dicts with numeric fields parsed; validates the column contract."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} columns")
            rows.append(
                {
                    "scheme": row[0],
                    "topology": row[1],
                    "seed": int(row[2]),
                    "copies": int(row[3]),
                    "lambda": float(row[4]),
                    "k_paths": int(row[5]),
                    "total_bandwidth": float(row[6]),
                    "mean_tct": float(row[7]),
                    "tail_tct_p99": float(row[8]),
                    "max_tct": float(row[9]),
                    "num_requests": int(row[10]),
                    "mean_alloc_ms": float(row[11]),
                    "mean_slot_ms": float(row[12]),
                }
            )
    return rows
