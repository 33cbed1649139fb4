"""Report assembly and deterministic serialization.

JSON reports are emitted with lexicographically sorted keys, two-space
indent, and a trailing newline, so identical inputs always produce identical
bytes and a parsed report re-serializes byte-identically. Plot data is tidy
CSV with columns ``series,x,y`` and 12-significant-digit numeric formatting.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .distributions import (
    homogeneity_metrics,
    l1_distance,
    observed_distribution,
    poisson_binomial,
)
from .errors import EmptyEcosystem, MalformedInput
from .matrix import Ecosystem, failure_rates


@dataclass(frozen=True)
class EcosystemReport:
    """Single-period summary: rates, observed vs baseline, and deviations."""

    period: str
    model_ids_ordered: tuple[str, ...]
    failure_rates: tuple[float, ...]
    observed: tuple[float, ...]
    baseline: tuple[float, ...]
    per_t_difference: tuple[float, ...]
    per_t_ratio: tuple[float | None, ...]
    systemic_failure_rate: float
    consistent_success_rate: float
    l1_observed_baseline: float
    tv_observed_baseline: float
    n_instances: int
    dropped_instances: int = 0

    def to_dict(self) -> dict:
        return {
            "report": "ecosystem",
            "period": self.period,
            "model_ids_ordered": list(self.model_ids_ordered),
            "failure_rates": list(self.failure_rates),
            "observed": list(self.observed),
            "baseline": list(self.baseline),
            "per_t_difference": list(self.per_t_difference),
            "per_t_ratio": list(self.per_t_ratio),
            "systemic_failure_rate": self.systemic_failure_rate,
            "consistent_success_rate": self.consistent_success_rate,
            "l1_observed_baseline": self.l1_observed_baseline,
            "tv_observed_baseline": self.tv_observed_baseline,
            "n_instances": self.n_instances,
            "dropped_instances": self.dropped_instances,
        }

    def plot_rows(self, series: Sequence[str] | None = None) -> list[tuple]:
        by_name = {
            "observed": self.observed,
            "baseline": self.baseline,
            "difference": self.per_t_difference,
        }
        names = tuple(series) if series is not None else ("observed", "baseline")
        rows = []
        for name in names:
            if name not in by_name:
                raise ValueError(f"unknown plot series {name!r}")
            rows.extend((name, t, y) for t, y in enumerate(by_name[name]))
        return rows


def ecosystem_report(eco: Ecosystem) -> EcosystemReport:
    """Build the full observed-vs-baseline report for one ecosystem."""
    rates = failure_rates(eco)
    observed = observed_distribution(eco)
    baseline = poisson_binomial(rates)
    metrics = homogeneity_metrics(observed, baseline)
    l1 = l1_distance(observed, baseline)
    return EcosystemReport(
        period=eco.period,
        model_ids_ordered=eco.model_ids_ordered,
        failure_rates=rates,
        observed=tuple(float(v) for v in observed),
        baseline=tuple(float(v) for v in baseline),
        per_t_difference=metrics.difference,
        per_t_ratio=metrics.ratio,
        systemic_failure_rate=float(observed[-1]),
        consistent_success_rate=float(observed[0]),
        l1_observed_baseline=l1,
        tv_observed_baseline=0.5 * l1,
        n_instances=eco.n_instances,
        dropped_instances=eco.dropped_instances,
    )


def _plain(value):
    """Recursively convert numpy scalars/arrays to JSON-safe Python values."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def report_json_bytes(report) -> bytes:
    """Deterministic JSON encoding of a report (dataclass or plain dict)."""
    payload = report.to_dict() if hasattr(report, "to_dict") else report
    if not isinstance(payload, dict):
        raise MalformedInput("report must serialize to a JSON object")
    if payload.get("n_instances") == 0:
        raise EmptyEcosystem("refusing to serialize a report over zero instances")
    text = json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False)
    return (text + "\n").encode("utf-8")


def write_report(report, sink) -> None:
    """Serialize a report as stable-key-order JSON to a path or file object."""
    _write(sink, report_json_bytes(report))


def parse_report(source) -> dict:
    """Inverse of write_report; the parsed dict re-serializes byte-identically."""
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def plot_csv_bytes(report, series: Sequence[str] | None = None) -> bytes:
    """Tidy CSV (series,x,y) for any report exposing plot_rows()."""
    if not hasattr(report, "plot_rows"):
        raise MalformedInput(
            f"{type(report).__name__} does not provide plot data"
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("series", "x", "y"))
    for name, x, y in report.plot_rows(series):
        writer.writerow((name, format_value(x), format_value(y)))
    return buf.getvalue().encode("utf-8")


def write_plot_data(report, sink, series: Sequence[str] | None = None) -> None:
    """Write plot data CSV to a path or file object."""
    _write(sink, plot_csv_bytes(report, series))


def _write(sink, data: bytes) -> None:
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        try:
            sink.write(data)
        except TypeError:
            sink.write(data.decode("utf-8"))
