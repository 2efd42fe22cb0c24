"""Point-to-multipoint inter-datacenter transfer scheduling simulator.

Forwarding-tree selection over a slotted timeline with FCFS earliest-finish
scheduling, its tree-selection and discipline variants, and point-to-point
multipath baselines.
"""

from .engine import SCHEMES, SimulationResult, simulate
from .metrics import MetricsAccumulator, RunReport, nearest_rank, normalize
from .p2p import UnicastTransfer, k_shortest_paths
from .scheduler import (
    InvariantViolation,
    LinkState,
    TransferRequest,
    TransmissionSchedule,
    allocate,
    batch_schedule,
    srpt_reschedule,
    update,
)
from .steiner import (
    ForwardingTree,
    WeightedView,
    bottleneck_steiner_tree,
    exact_steiner_small,
    min_weight_steiner_tree,
    random_tree,
)
from .topology import Arc, Topology, build_gscale, build_random, load_topology, validate
from .workload import WorkloadSpec, dump_workload, generate, load_workload

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "ForwardingTree",
    "InvariantViolation",
    "LinkState",
    "MetricsAccumulator",
    "RunReport",
    "SCHEMES",
    "SimulationResult",
    "Topology",
    "TransferRequest",
    "TransmissionSchedule",
    "UnicastTransfer",
    "WeightedView",
    "WorkloadSpec",
    "allocate",
    "batch_schedule",
    "bottleneck_steiner_tree",
    "build_gscale",
    "build_random",
    "dump_workload",
    "exact_steiner_small",
    "generate",
    "k_shortest_paths",
    "load_topology",
    "load_workload",
    "min_weight_steiner_tree",
    "nearest_rank",
    "normalize",
    "random_tree",
    "simulate",
    "srpt_reschedule",
    "update",
    "validate",
]
