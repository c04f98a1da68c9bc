"""Cache policy interface used by the engine, plus the placement-driven policy."""
from __future__ import annotations

from typing import Callable, Iterable, Mapping

from .store import STATIC, ContentStore


class CachePolicy:
    """How router stores are built, refreshed on hits and filled on deliveries.

    ``on_delivery`` receives the stores of hops ``1 .. hit_hop - 1`` (edge
    first), i.e. the routers the data crosses on its way back to the
    consumer.
    """

    name = "none"
    # seconds between replan() calls; 0 disables them
    replan_interval = 0.0

    def make_store(self, node: int, capacity: float) -> ContentStore:
        return ContentStore(capacity, STATIC)

    def on_hit(self, store: ContentStore, seg) -> None:
        store.touch(seg)

    def on_delivery(self, stores: list[ContentStore], hit_hop: int, seg, size: float, rng) -> None:
        return None

    def replan(self, now: float, stats) -> bool:
        """Called every ``replan_interval`` seconds; return True to rebuild all stores."""
        return False


class NoCache(CachePolicy):
    """Empty static stores: every request is served by the producer."""

    name = "none"


class StaticPlacement(CachePolicy):
    """Stores loaded from a placement map and frozen for the whole run."""

    name = "static"

    def __init__(self, placement: Mapping[int, Iterable], size_of: Callable[[object], float]):
        self.placement = {int(v): tuple(segs) for v, segs in placement.items()}
        self.size_of = size_of

    def make_store(self, node, capacity):
        cs = ContentStore(capacity, STATIC)
        cs.load((s, self.size_of(s)) for s in self.placement.get(node, ()))
        return cs


class PeriodicPlacement(StaticPlacement):
    """Static stores that are recomputed at fixed intervals during a run.

    ``planner(stats)`` receives the run's statistics so far and returns a
    new placement map.  Stores never change between two replans.
    """

    name = "periodic"

    def __init__(self, placement, size_of, planner: Callable, interval: float):
        super().__init__(placement, size_of)
        if not interval > 0:
            raise ValueError("replan interval must be > 0")
        self.planner = planner
        self.replan_interval = float(interval)
        self.history: list = []

    def replan(self, now, stats):
        new = self.planner(stats)
        self.history.append(now)
        if new is None:
            return False
        self.placement = {int(v): tuple(segs) for v, segs in new.items()}
        return True
