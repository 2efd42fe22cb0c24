#!/usr/bin/env python3
"""Grouped bar charts from simulator result CSVs.

Reads the runner's results CSV (fixed 13-column schema), averages the chosen
metric over seeds, normalizes by the chart minimum, and draws one bar group
per destination count with one bar per scheme, min/max whiskers across seeds.

Usage:
    plot.py --csv results.csv --metric bandwidth --out bandwidth.png
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

EXPECTED_HEADER = [
    "scheme", "topology", "seed", "copies", "lambda", "k_paths",
    "total_bandwidth", "mean_tct", "tail_tct_p99", "max_tct",
    "num_requests", "mean_alloc_ms", "mean_slot_ms",
]

METRIC_COLUMNS = {
    "bandwidth": "total_bandwidth",
    "mean_tct": "mean_tct",
    "tail_tct": "tail_tct_p99",
}


class CsvFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    csv_paths: tuple[str, ...]
    metric: str                      # bandwidth | mean_tct | tail_tct
    out_path: str
    title: str = ""


@dataclass
class Series:
    """Normalized chart data: one entry per scheme, aligned to `copies`."""

    copies: list[int]
    schemes: list[str]
    bars: dict[str, list[float]] = field(default_factory=dict)      # normalized means
    whisker_low: dict[str, list[float]] = field(default_factory=dict)
    whisker_high: dict[str, list[float]] = field(default_factory=dict)
    divisor: float = 1.0


def load_rows(paths: tuple[str, ...]) -> list[dict]:
    rows: list[dict] = []
    for path in paths:
        try:
            fh = open(path, newline="")
        except OSError as exc:
            raise CsvFormatError(f"{path}: cannot open ({exc})")
        with fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != EXPECTED_HEADER:
                raise CsvFormatError(f"{path}:1: unexpected header {header}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(EXPECTED_HEADER):
                    raise CsvFormatError(
                        f"{path}:{lineno}: expected {len(EXPECTED_HEADER)} columns, got {len(row)}"
                    )
                try:
                    rows.append(
                        {
                            "scheme": row[0],
                            "seed": int(row[2]),
                            "copies": int(row[3]),
                            "total_bandwidth": float(row[6]),
                            "mean_tct": float(row[7]),
                            "tail_tct_p99": float(row[8]),
                        }
                    )
                except ValueError as exc:
                    raise CsvFormatError(f"{path}:{lineno}: bad value ({exc})")
    if not rows:
        raise CsvFormatError(f"{paths}: no data rows")
    return rows


def build_series(rows: list[dict], metric: str) -> Series:
    """Pure function of the rows: identical input gives identical series."""
    column = METRIC_COLUMNS.get(metric)
    if column is None:
        raise CsvFormatError(
            f"unknown metric {metric!r}; pick one of {', '.join(METRIC_COLUMNS)}"
        )
    cells: dict[tuple[str, int], list[float]] = {}
    for row in rows:
        cells.setdefault((row["scheme"], row["copies"]), []).append(row[column])
    schemes = sorted({s for s, _ in cells})
    copies = sorted({c for _, c in cells})
    means = {
        key: sum(vals) / len(vals) for key, vals in cells.items()
    }
    divisor = min(means.values())
    if divisor <= 0:
        raise CsvFormatError("normalization divisor must be positive")
    series = Series(copies=copies, schemes=schemes, divisor=divisor)
    for scheme in schemes:
        series.bars[scheme] = []
        series.whisker_low[scheme] = []
        series.whisker_high[scheme] = []
        for c in copies:
            vals = cells.get((scheme, c))
            if vals is None:
                raise CsvFormatError(f"missing cell: scheme {scheme}, copies {c}")
            series.bars[scheme].append((sum(vals) / len(vals)) / divisor)
            series.whisker_low[scheme].append(min(vals) / divisor)
            series.whisker_high[scheme].append(max(vals) / divisor)
    return series


AXIS_LABELS = {
    "bandwidth": "total bandwidth (normalized)",
    "mean_tct": "mean completion time (normalized)",
    "tail_tct": "tail (p99) completion time (normalized)",
}


def render(spec: FigureSpec) -> Series:
    """Build the series and write the chart; returns the plotted series."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = load_rows(spec.csv_paths)
    series = build_series(rows, spec.metric)

    n_schemes = len(series.schemes)
    width = 0.8 / n_schemes
    fig, ax = plt.subplots(figsize=(7.5, 4.0))
    for idx, scheme in enumerate(series.schemes):
        positions = [
            c_idx - 0.4 + width * (idx + 0.5) for c_idx in range(len(series.copies))
        ]
        bars = series.bars[scheme]
        err_low = [b - lo for b, lo in zip(bars, series.whisker_low[scheme])]
        err_high = [hi - b for b, hi in zip(bars, series.whisker_high[scheme])]
        ax.bar(
            positions, bars, width=width, label=scheme,
            yerr=[err_low, err_high], capsize=2, linewidth=0.5, edgecolor="black",
        )
    ax.set_xticks(range(len(series.copies)))
    ax.set_xticklabels([str(c) for c in series.copies])
    ax.set_xlabel("destinations per transfer")
    ax.set_ylabel(AXIS_LABELS[spec.metric])
    if spec.title:
        ax.set_title(spec.title)
    ax.axhline(1.0, color="gray", linewidth=0.6, linestyle=":")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return series


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csv", required=True, nargs="+", help="input results CSV(s)")
    parser.add_argument(
        "--metric", required=True, choices=sorted(METRIC_COLUMNS), help="metric to chart"
    )
    parser.add_argument("--out", required=True, help="output image path (.png)")
    parser.add_argument("--title", default="", help="optional chart title")
    args = parser.parse_args(argv)
    spec = FigureSpec(
        csv_paths=tuple(args.csv), metric=args.metric, out_path=args.out, title=args.title
    )
    try:
        series = render(spec)
    except CsvFormatError as exc:
        print(f"csv error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {args.out}: {len(series.schemes)} schemes x {len(series.copies)} "
        f"destination counts (divisor {series.divisor:.6g})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
