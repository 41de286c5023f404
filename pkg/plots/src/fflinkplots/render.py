"""Render fflink sweep CSVs into publication-style figures.

Consumes only the documented results.csv schema; four figure kinds mirror the
standard evaluation views: min spectral efficiency vs SNR, min spectral
efficiency vs gain correlation, latency CDFs, and energy efficiency vs SNR.
Output is a vector image; rendering is deterministic for a fixed input.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fflink-plots"
import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = (
    "trial",
    "method",
    "snr_db",
    "eta",
    "min_se_bps_hz",
    "t_star",
    "t1_ms",
    "t2_ms",
    "t3_ms",
    "latency_ms",
    "ee_bpshz_per_w",
    "failed",
)

FIGURE_KINDS = ("se_snr", "se_eta", "latency_cdf", "ee_snr")


class SchemaError(ValueError):
    """Input CSV does not match the documented schema."""


def load_rows(csv_path: Path) -> list[dict]:
    """Parse the results CSV, skipping failed trials."""
    try:
        fh = csv_path.open()
    except OSError as exc:
        raise SchemaError(f"cannot open {csv_path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"missing required column {col!r} in {csv_path}")
        rows = []
        for raw in reader:
            if raw["failed"] not in ("0", "0.0", "False", ""):
                continue
            rows.append(
                {
                    "method": raw["method"],
                    "snr_db": float(raw["snr_db"]),
                    "eta": float(raw["eta"]),
                    "min_se": float(raw["min_se_bps_hz"]),
                    "latency_ms": float(raw["latency_ms"]),
                    "ee": float(raw["ee_bpshz_per_w"]),
                }
            )
    if not rows:
        raise SchemaError(f"no usable rows in {csv_path}")
    return rows


def mean_sem_series(rows, x_key: str, y_key: str):
    """Per-method mean curve with standard errors over the x grid."""
    bucket: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        bucket[r["method"]][r[x_key]].append(r[y_key])
    series = {}
    for method, points in bucket.items():
        xs = sorted(points)
        means = [float(np.mean(points[x])) for x in xs]
        sems = [
            float(np.std(points[x], ddof=1) / math.sqrt(len(points[x])))
            if len(points[x]) > 1
            else 0.0
            for x in xs
        ]
        series[method] = (xs, means, sems)
    return series


def empirical_cdf(values):
    """Sorted sample values against (i/n); nondecreasing, range (0, 1]."""
    v = np.sort(np.asarray(values, dtype=float))
    return v, np.arange(1, len(v) + 1) / len(v)


def render(csv_path: Path, kind: str, out_path: Path) -> Path:
    """Draw one figure kind from the CSV and write a vector image."""
    if kind not in FIGURE_KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS}")
    rows = load_rows(csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))

    if kind in ("se_snr", "ee_snr"):
        y_key = "min_se" if kind == "se_snr" else "ee"
        series = mean_sem_series(rows, "snr_db", y_key)
        for method in sorted(series):
            xs, means, sems = series[method]
            ax.errorbar(xs, means, yerr=sems, marker="o", capsize=3, label=method)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel(
            "min spectral efficiency (bits/s/Hz)"
            if kind == "se_snr"
            else "energy efficiency (bits/s/Hz per W)"
        )
    elif kind == "se_eta":
        series = mean_sem_series(rows, "eta", "min_se")
        for method in sorted(series):
            xs, means, sems = series[method]
            ax.errorbar(xs, means, yerr=sems, marker="s", capsize=3, label=method)
        ax.set_xlabel("uplink/downlink gain correlation")
        ax.set_ylabel("min spectral efficiency (bits/s/Hz)")
    else:  # latency_cdf
        bucket: dict[str, list[float]] = defaultdict(list)
        for r in rows:
            bucket[r["method"]].append(r["latency_ms"])
        for method in sorted(bucket):
            xs, ps = empirical_cdf(bucket[method])
            ax.step(xs, ps, where="post", label=method)
        ax.set_xlabel("latency (ms)")
        ax.set_ylabel("CDF")
        ax.set_ylim(0.0, 1.02)

    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out_path.suffix.lower() == ".svg" else None
    fig.savefig(out_path, metadata=metadata)
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fflink-plots",
        description="Render fflink result CSVs into figures",
    )
    parser.add_argument("--csv", type=Path, required=True, help="results.csv path")
    parser.add_argument("--kind", choices=FIGURE_KINDS, required=True)
    parser.add_argument("--out", type=Path, required=True,
                        help="output image path (.svg or .pdf)")
    args = parser.parse_args(argv)
    try:
        path = render(args.csv, args.kind, args.out)
    except SchemaError as exc:
        print(f"fflink-plots: error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
