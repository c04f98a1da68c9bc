"""Router content stores with LRU / LFU replacement or static contents."""
from __future__ import annotations

from collections import OrderedDict
from typing import Hashable, Iterable

LRU = "lru"
LFU = "lfu"
STATIC = "static"


class ContentStore:
    """Byte-capacity store.

    Entries are kept in recency order (oldest first); each carries its size
    and an access frequency used by LFU.  A ``static`` store is loaded once
    and never changes on hits or deliveries.
    """

    def __init__(self, capacity: float, policy: str = LRU):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        if policy not in (LRU, LFU, STATIC):
            raise ValueError(f"unknown replacement policy {policy!r}")
        self.capacity = float(capacity)
        self.policy = policy
        self.entries: OrderedDict[Hashable, list] = OrderedDict()
        self.occupancy = 0.0

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return list(self.entries)

    def touch(self, key) -> bool:
        """Register a hit: refresh recency and frequency.  Static stores ignore it."""
        if key not in self.entries:
            return False
        if self.policy != STATIC:
            self.entries[key][1] += 1
            self.entries.move_to_end(key)
        return True

    def _victim(self):
        if self.policy == LFU:
            # lowest frequency; ties go to the least recently used
            best, best_freq = None, None
            for key, (_, freq) in self.entries.items():
                if best_freq is None or freq < best_freq:
                    best, best_freq = key, freq
            return best
        return next(iter(self.entries))

    def insert(self, key, size: float) -> list:
        """Insert ``key`` (or refresh it if present); return evicted keys.

        Objects larger than the whole store are never cached.
        """
        if key in self.entries:
            self.touch(key)
            return []
        if size > self.capacity:
            return []
        evicted = []
        while self.occupancy + size > self.capacity + 1e-9 and self.entries:
            victim = self._victim()
            vsize, _ = self.entries.pop(victim)
            self.occupancy -= vsize
            evicted.append(victim)
        self.entries[key] = [float(size), 1]
        self.occupancy += size
        return evicted

    def load(self, items: Iterable[tuple[Hashable, float]]):
        """Replace the contents wholesale (placement-driven stores)."""
        self.entries.clear()
        self.occupancy = 0.0
        for key, size in items:
            if key in self.entries:
                continue
            self.entries[key] = [float(size), 0]
            self.occupancy += size
        if self.occupancy > self.capacity + 1e-6:
            raise ValueError(f"placement overfills store ({self.occupancy} > {self.capacity})")

    def check(self):
        total = sum(sz for sz, _ in self.entries.values())
        assert abs(total - self.occupancy) <= 1e-6 * max(1.0, total), "occupancy drift"
        assert self.occupancy <= self.capacity + 1e-6, "store over capacity"


def cs_lookup_insert(cs: ContentStore, key, size: float, insert_on_miss: bool = True):
    """Look ``key`` up; on a miss optionally insert it.  Returns ``(hit, evicted)``."""
    if cs.touch(key):
        return True, []
    if not insert_on_miss or cs.policy == STATIC:
        return False, []
    return False, cs.insert(key, size)
