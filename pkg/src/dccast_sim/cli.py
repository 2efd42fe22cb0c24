"""Experiment runner CLI.

Subcommands:
  run       execute one scheme over a (copies x seeds) sweep, write a CSV
  workload  dump the generated workload for a config to CSV
  verify    run the built-in invariant/oracle battery

Config files are flat ``key = value`` text; command-line flags override file
values, which override the documented defaults. Exit codes: 0 success,
1 configuration error, 2 invariant violation during simulation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from .engine import SCHEMES, simulate
from .metrics import write_csv
from .scheduler import InvariantViolation
from .topology import topologies_from_spec
from .workload import WorkloadSpec, dump_workload, generate


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "scheme": None,
    "topology": None,
    "copies": "1",
    "seeds": "1",
    "lambda": "1",
    "demand_constant": "10",
    "demand_mean": "20",
    "last_arrival": "500",
    "slot_seconds": "1",
    "capacity": "1.0",
    "k_paths": "3",
    "batch_window": "5",
    "tail": "p99",
    "out": "results.csv",
}


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    topology: str
    copies: tuple[int, ...]
    seeds: tuple[int, ...]
    arrival_rate: float
    demand_constant: float
    demand_mean: float
    last_arrival: int
    slot_seconds: float
    capacity: float
    k_paths: int
    batch_window: int
    tail_percentile: float
    out: str


def _parse_int_list(text: str, key: str) -> tuple[int, ...]:
    out: list[int] = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        if "-" in token and not token.startswith("-"):
            lo_s, hi_s = token.split("-", 1)
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise ConfigError(f"config key '{key}': bad range {token!r}")
            if hi < lo:
                raise ConfigError(f"config key '{key}': empty range {token!r}")
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(token))
            except ValueError:
                raise ConfigError(f"config key '{key}': bad integer {token!r}")
    if not out:
        raise ConfigError(f"config key '{key}': no values")
    return tuple(out)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
            values[key] = value
    return values


def build_config(file_values: dict[str, str], overrides: dict[str, str]) -> ExperimentConfig:
    explicit = set(file_values) | set(overrides)
    merged = dict(DEFAULTS)
    merged.update(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})

    scheme = merged["scheme"]
    if not scheme:
        raise ConfigError("missing config key 'scheme'")
    scheme = scheme.upper()
    if scheme not in SCHEMES:
        raise ConfigError(f"config key 'scheme': unknown scheme {scheme!r}")
    topology = merged["topology"]
    if not topology:
        raise ConfigError("missing config key 'topology'")
    if topology.startswith("random:") and "seeds" not in explicit:
        raise ConfigError(
            "config key 'seeds': random topologies need explicit seeds "
            "(the topology structure is seed-dependent)"
        )

    copies = _parse_int_list(merged["copies"], "copies")
    if any(c < 1 for c in copies):
        raise ConfigError("config key 'copies': values must be >= 1")
    seeds = _parse_int_list(merged["seeds"], "seeds")

    def _float(key: str, positive: bool = True) -> float:
        try:
            val = float(merged[key])
        except ValueError:
            raise ConfigError(f"config key '{key}': bad number {merged[key]!r}")
        if positive and val <= 0:
            raise ConfigError(f"config key '{key}': must be > 0")
        return val

    def _int(key: str, minimum: int = 1) -> int:
        try:
            val = int(merged[key])
        except ValueError:
            raise ConfigError(f"config key '{key}': bad integer {merged[key]!r}")
        if val < minimum:
            raise ConfigError(f"config key '{key}': must be >= {minimum}")
        return val

    demand_constant = _float("demand_constant", positive=False)
    if demand_constant < 0:
        raise ConfigError("config key 'demand_constant': must be >= 0")
    tail_text = merged["tail"].strip().lower()
    if not tail_text.startswith("p"):
        raise ConfigError("config key 'tail': expected something like 'p99'")
    try:
        tail_percentile = float(tail_text[1:])
    except ValueError:
        raise ConfigError(f"config key 'tail': bad percentile {tail_text!r}")
    if not (0 < tail_percentile <= 100):
        raise ConfigError("config key 'tail': percentile must be in (0, 100]")

    return ExperimentConfig(
        scheme=scheme,
        topology=topology,
        copies=copies,
        seeds=seeds,
        arrival_rate=_float("lambda"),
        demand_constant=demand_constant,
        demand_mean=_float("demand_mean"),
        last_arrival=_int("last_arrival"),
        slot_seconds=_float("slot_seconds"),
        capacity=_float("capacity"),
        k_paths=_int("k_paths"),
        batch_window=_int("batch_window"),
        tail_percentile=tail_percentile,
        out=merged["out"],
    )


def parse_config(path: str) -> ExperimentConfig:
    """Load and fully validate a config file (no overrides)."""
    return build_config(_read_config_file(path), {})


def run(config: ExperimentConfig) -> list:
    """Execute the sweep; returns the reports after writing the CSV."""
    reports = []
    for seed in config.seeds:
        topo = topologies_from_spec(config.topology, seed, config.capacity)
        for copies in config.copies:
            spec = WorkloadSpec(
                arrival_rate=config.arrival_rate,
                demand_constant=config.demand_constant,
                demand_mean=config.demand_mean,
                copies=copies,
                last_arrival=config.last_arrival,
                seed=seed,
            )
            requests = generate(spec, topo)
            result = simulate(
                topo,
                requests,
                config.scheme,
                k_paths=config.k_paths,
                batch_window=config.batch_window,
                slot_seconds=config.slot_seconds,
                seed=seed,
                tail_percentile=config.tail_percentile,
            )
            reports.append(
                result.report(
                    topology_name=config.topology,
                    seed=seed,
                    copies=copies,
                    arrival_rate=config.arrival_rate,
                    k_paths=config.k_paths,
                )
            )
    write_csv(config.out, reports)
    return reports


def _collect_overrides(args: argparse.Namespace) -> dict[str, str]:
    overrides = {}
    for key in ("scheme", "topology", "copies", "seeds", "out"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dccast-sim",
        description="Point-to-multipoint transfer scheduling simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scheme over a copies x seeds sweep")
    p_run.add_argument("--config", help="flat key=value config file")
    p_run.add_argument("--scheme", help="override: scheme name")
    p_run.add_argument("--topology", help="override: gscale | random:n,m | file:path")
    p_run.add_argument("--copies", help="override: e.g. 1-6 or 2,4")
    p_run.add_argument("--seeds", help="override: e.g. 1-5")
    p_run.add_argument("--out", help="override: output CSV path")

    p_wl = sub.add_parser("workload", help="dump a generated workload to CSV")
    p_wl.add_argument("--dump", required=True, help="output CSV path")
    p_wl.add_argument("--config", help="flat key=value config file")
    p_wl.add_argument("--scheme", help=argparse.SUPPRESS)
    p_wl.add_argument("--topology", help="override: gscale | random:n,m | file:path")
    p_wl.add_argument("--copies", help="override: single value used for the dump")
    p_wl.add_argument("--seeds", help="override: first value seeds the dump")

    sub.add_parser("verify", help="run the invariant and oracle battery")

    args = parser.parse_args(argv)

    if args.command == "verify":
        from . import verify

        failed = verify.run_battery()
        return 2 if failed else 0

    try:
        file_values = _read_config_file(args.config) if args.config else {}
        overrides = _collect_overrides(args)
        if args.command == "workload" and "scheme" not in overrides and "scheme" not in file_values:
            overrides["scheme"] = "DCCAST"  # workload generation is scheme-independent
        config = build_config(file_values, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "run":
            reports = run(config)
            print(f"wrote {len(reports)} rows to {config.out}")
            return 0
        # workload dump
        topo = topologies_from_spec(config.topology, config.seeds[0], config.capacity)
        spec = WorkloadSpec(
            arrival_rate=config.arrival_rate,
            demand_constant=config.demand_constant,
            demand_mean=config.demand_mean,
            copies=config.copies[0],
            last_arrival=config.last_arrival,
            seed=config.seeds[0],
        )
        requests = generate(spec, topo)
        dump_workload(args.dump, requests)
        print(f"wrote {len(requests)} requests to {args.dump}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
