"""Request counts and per-hop delivery-delay statistics."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field


@dataclass
class RunningMean:
    count: int = 0
    mean: float = 0.0

    def add(self, x: float):
        self.count += 1
        self.mean += (x - self.mean) / self.count


@dataclass
class StatsLedger:
    """Statistics consumed by the placement engines.

    ``theta[d][seg]`` counts segment requests seen at edge ``d``.  Delay
    samples are keyed by ``(edge, producer, hop, rank)`` because a hop index
    only identifies a router once the forwarding path is fixed.
    """

    theta: dict = field(default_factory=lambda: defaultdict(lambda: defaultdict(int)))
    delays: dict = field(default_factory=lambda: defaultdict(RunningMean))

    def count_request(self, edge: int, seg, n: int = 1):
        self.theta[edge][seg] += n

    def theta_of(self, edge: int) -> dict:
        return dict(self.theta.get(edge, {}))

    def record_delivery(self, edge: int, hop: int, b: int, delay: float, producer: int = 0):
        if hop < 1:
            raise ValueError("hop must be >= 1")
        self.delays[(edge, producer, hop, b)].add(float(delay))

    def mean_delay(self, edge: int, hop: int, b: int, producer: int = 0,
                   min_samples: int = 1) -> float | None:
        """Mean delay, or ``None`` when fewer than ``min_samples`` were recorded."""
        rm = self.delays.get((edge, producer, hop, b))
        if rm is None or rm.count < max(1, min_samples):
            return None
        return rm.mean

    def sample_count(self, edge: int, hop: int, b: int, producer: int = 0) -> int:
        rm = self.delays.get((edge, producer, hop, b))
        return 0 if rm is None else rm.count

    def to_plain(self) -> dict:
        """Deterministic plain-data view (for hashing and comparisons)."""
        theta = {d: dict(sorted(v.items())) for d, v in sorted(self.theta.items())}
        delays = {k: (v.count, v.mean) for k, v in sorted(self.delays.items())}
        return {"theta": theta, "delays": delays}


def record_delivery(stats: StatsLedger, edge: int, hop: int, b: int, delay: float,
                    producer: int = 0):
    stats.record_delivery(edge, hop, b, delay, producer)
