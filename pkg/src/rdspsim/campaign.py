"""Comparative campaigns: both protocols over every named path and seed."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .engine import PROTOCOLS, EventTrace, run
from .metrics import METRICS, MetricsReport, aggregate, compute, relative_delta
from .model import Kind, MessageId, NodeId
from .scenario import ScenarioConfig

# slower radio with longer frames, where contention separates the two protocols
CALIBRATION = {
    "bitrate_bps": 250e3,
    "frame_overhead_s": 0.006,
    "per_hop_proc_s": 0.002,
    "csma_max_backoff_s": 0.2,
}

DELTA_METRICS = ("end_to_end_delay_s", "round_trip_delay_s", "delivery_ratio",
                 "overhead_msgs", "overhead_bytes")


def _one(job: tuple[ScenarioConfig, str, str, int]) -> tuple[tuple[str, str, int], MetricsReport]:
    config, protocol, path, seed = job
    trace = run(config, protocol, seed)
    return (protocol, path, seed), compute(trace, config, path, protocol)


@dataclass
class CampaignResult:
    reports: dict[tuple[str, str], MetricsReport]
    paths: tuple[str, ...]
    seeds: tuple[int, ...]

    def ordered(self) -> list[MetricsReport]:
        return [self.reports[p, n] for p in PROTOCOLS for n in self.paths
                if (p, n) in self.reports]

    def delta(self, metric: str, path: str) -> float:
        return relative_delta(self.reports["rdsp", path].mean(metric),
                              self.reports["uf", path].mean(metric))

    def mean_delta(self, metric: str) -> float:
        """Per-path relative deltas averaged over the paths."""
        values = [self.delta(metric, p) for p in self.paths]
        return sum(values) / len(values)


def run_campaign(config: ScenarioConfig, seeds: Sequence[int], jobs: int = 1,
                 protocols: Iterable[str] = PROTOCOLS,
                 paths: Optional[Sequence[str]] = None) -> CampaignResult:
    """Simulate each (protocol, path, seed) and aggregate over seeds.

    Each path is run on its own activation of the scenario. Results are
    keyed and sorted before aggregation, so the outcome does not depend on
    the order in which parallel runs finish.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    if paths is None:
        paths = [name for name, _ in config.named_paths]
    if not paths:
        raise ValueError("scenario defines no paths")
    activated = {name: config.activate_path(name) for name in paths}
    work = [(activated[name], proto, name, seed)
            for proto in protocols for name in paths for seed in seeds]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_one, work))
    else:
        results = dict(map(_one, work))
    reports = {}
    for proto in protocols:
        for name in paths:
            reports[proto, name] = aggregate(results[proto, name, s] for s in sorted(seeds))
    return CampaignResult(reports, tuple(paths), tuple(seeds))


def summary_table(result: CampaignResult) -> str:
    """Fixed-width text table of per-path means and RDSP-vs-UF deltas."""
    cols = ("end_to_end_delay_s", "round_trip_delay_s", "delivery_ratio", "overhead_msgs")
    heads = ("e2e_s", "rtt_s", "deliv", "ovh_msgs")
    lines = [f"{'path':<8} {'dist_m':>8} " + " ".join(
        f"{p + ':' + h:>14}" for h in heads for p in ("rdsp", "uf"))]
    for name in result.paths:
        r, u = result.reports["rdsp", name], result.reports["uf", name]
        cells = []
        for m in cols:
            cells += [f"{r.mean(m):>14.4f}", f"{u.mean(m):>14.4f}"]
        lines.append(f"{name:<8} {r.mean('distance_covered_m'):>8.1f} " + " ".join(cells))
    lines.append("")
    lines.append("RDSP vs UF (percent, negative = RDSP lower)")
    for m in DELTA_METRICS:
        per_path = "  ".join(f"{n}={result.delta(m, n):+.1f}" for n in result.paths)
        lines.append(f"  {m:<20} mean={result.mean_delta(m):+.1f}  {per_path}")
    if len(result.seeds) == 1:
        lines.append("single repeat: stddev undefined, reported as 0")
    return "\n".join(lines) + "\n"


def hop_route(trace: EventTrace, kind: Kind, message_id: MessageId) -> list[NodeId]:
    """Nodes a request or ack passed through, from its first sender onwards,
    following the first transmission of it by each node."""
    wanted = f"kind={kind.value} id={message_id}"
    route: list[NodeId] = []
    for rec in trace.select("send"):
        if wanted not in rec.detail:
            continue
        target = rec.fields()["to"]
        if not route:
            route.append(rec.node)
        if rec.node == route[-1] and target != "*":
            route.append(int(target))
    return route


__all__ = ["CALIBRATION", "CampaignResult", "METRICS", "hop_route", "run_campaign",
           "summary_table"]
