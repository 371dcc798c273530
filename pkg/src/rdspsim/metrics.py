"""Evaluation metrics computed from event traces, and their aggregation
across repeated runs."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .engine import EventTrace, TruncatedTraceError
from .model import MessageId, Role
from .scenario import ScenarioConfig, path_distance

METRICS = (
    "distance_covered_m",
    "end_to_end_delay_s",
    "round_trip_delay_s",
    "delivery_ratio",
    "overhead_msgs",
    "overhead_bytes",
    "ack_msgs",
)

CSV_HEADER = ("protocol", "path", "metric", "mean", "stddev", "repeats")


class MetricsError(ValueError):
    pass


@dataclass
class MetricsReport:
    protocol: str
    path: str
    samples: dict[str, list[float]] = field(default_factory=dict)

    @property
    def repeats(self) -> int:
        return len(next(iter(self.samples.values()), []))

    @property
    def stddev_defined(self) -> bool:
        return self.repeats > 1

    def mean(self, metric: str) -> float:
        values = [v for v in self.samples[metric] if not math.isnan(v)]
        return statistics.fmean(values) if values else math.nan

    def stddev(self, metric: str) -> float:
        """Sample standard deviation; 0 when a single repeat leaves it undefined."""
        values = [v for v in self.samples[metric] if not math.isnan(v)]
        return statistics.stdev(values) if len(values) > 1 else 0.0

    def __getitem__(self, metric: str) -> float:
        return self.mean(metric)


def _message_ids(records, action: str, node: Optional[int] = None) -> dict[MessageId, float]:
    first: dict[MessageId, float] = {}
    for rec in records:
        if rec.action == action and (node is None or rec.node == node):
            mid = MessageId.parse(rec.fields()["id"])
            first.setdefault(mid, rec.time)
    return first


def compute(trace: EventTrace, config: ScenarioConfig, path: Optional[str] = None,
            protocol: Optional[str] = None) -> MetricsReport:
    """Metrics of one finished run.

    Delays average over the requests that made it (no penalty for losses).
    Overhead counts hello and table-advertisement transmissions by relays;
    relay ack transmissions are reported separately.
    """
    if not trace.complete:
        raise TruncatedTraceError("trace has no end record")
    end = trace.records[-1]
    if protocol is None:
        protocol = end.fields().get("protocol", "?")
    server = config.server.node
    clients = {c.node for c in config.clients}
    relays = {r.node for r in config.relays}

    pressed = _message_ids((r for r in trace if r.node in clients), "press")
    arrived = _message_ids(trace, "alarm", server)
    acked = _message_ids((r for r in trace if r.node in clients), "rtt")

    e2e = [arrived[m] - pressed[m] for m in arrived if m in pressed]
    rtt = [acked[m] - pressed[m] for m in acked if m in pressed]
    overhead_msgs = overhead_bytes = ack_msgs = 0
    for rec in trace.select("send"):
        if rec.node not in relays:
            continue
        f = rec.fields()
        if f["kind"] in ("hello", "advert"):
            overhead_msgs += 1
            overhead_bytes += int(f["bytes"])
        elif f["kind"] == "ack":
            ack_msgs += 1

    if path is None and len(config.named_paths) == 1:
        path = config.named_paths[0][0]
    distance = path_distance(config, path) if path is not None else math.nan
    values = {
        "distance_covered_m": distance,
        "end_to_end_delay_s": statistics.fmean(e2e) if e2e else math.nan,
        "round_trip_delay_s": statistics.fmean(rtt) if rtt else math.nan,
        "delivery_ratio": len(e2e) / len(pressed) if pressed else math.nan,
        "overhead_msgs": float(overhead_msgs),
        "overhead_bytes": float(overhead_bytes),
        "ack_msgs": float(ack_msgs),
    }
    return MetricsReport(protocol, path or "all", {k: [v] for k, v in values.items()})


def per_message_delays(trace: EventTrace, config: ScenarioConfig
                       ) -> dict[MessageId, tuple[Optional[float], Optional[float]]]:
    """(end-to-end, round-trip) per pressed request; None where it never got there."""
    clients = {c.node for c in config.clients}
    pressed = _message_ids((r for r in trace if r.node in clients), "press")
    arrived = _message_ids(trace, "alarm", config.server.node)
    acked = _message_ids((r for r in trace if r.node in clients), "rtt")
    return {m: (arrived[m] - t if m in arrived else None, acked[m] - t if m in acked else None)
            for m, t in pressed.items()}


def aggregate(reports: Iterable[MetricsReport]) -> MetricsReport:
    reports = list(reports)
    if not reports:
        raise MetricsError("nothing to aggregate")
    first = reports[0]
    for rep in reports[1:]:
        if (rep.protocol, rep.path) != (first.protocol, first.path):
            raise MetricsError(f"mixed inputs: {first.protocol}/{first.path} "
                               f"vs {rep.protocol}/{rep.path}")
    merged = {m: [v for rep in reports for v in rep.samples[m]] for m in first.samples}
    return MetricsReport(first.protocol, first.path, merged)


def _num(value: float) -> str:
    return "nan" if math.isnan(value) else f"{value:.6f}"


def to_csv(reports: Iterable[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        for metric in METRICS:
            writer.writerow((rep.protocol, rep.path, metric, _num(rep.mean(metric)),
                             _num(rep.stddev(metric)), rep.repeats))
    return buf.getvalue()


def relative_delta(rdsp_value: float, uf_value: float) -> float:
    """Percent by which RDSP exceeds UF (negative: RDSP lower)."""
    return 100.0 * (rdsp_value - uf_value) / uf_value
