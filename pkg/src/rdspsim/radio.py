"""Disk radio with carrier sensing; parameters only, the mechanics live in
:mod:`rdspsim.engine`."""

from __future__ import annotations

from dataclasses import dataclass, fields

# haversine round-off on synthesized layouts is ~1e-6 m; exact 90 m hops must stay in range
RANGE_SLACK_M = 1e-3


@dataclass(frozen=True)
class RadioModel:
    range_m: float = 90.0
    bitrate_bps: float = 1_000_000.0
    per_hop_proc_s: float = 0.002
    csma_max_backoff_s: float = 0.010
    frame_overhead_s: float = 0.0
    loss_on_collision: bool = True

    def __post_init__(self):
        if self.range_m <= 0 or self.bitrate_bps <= 0:
            raise ValueError("range and bitrate must be positive")
        if min(self.per_hop_proc_s, self.csma_max_backoff_s, self.frame_overhead_s) < 0:
            raise ValueError("radio delays must be non-negative")

    def airtime(self, size_bytes: int) -> float:
        return self.frame_overhead_s + size_bytes * 8 / self.bitrate_bps

    def in_range(self, distance_m: float) -> bool:
        return distance_m <= self.range_m + RANGE_SLACK_M

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]
