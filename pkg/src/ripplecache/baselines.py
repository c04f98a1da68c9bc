"""Comparison caching policies: CE2 (LRU / LFU) and ProbCache."""
from __future__ import annotations

from .errors import InvalidParam
from .simcore.policies import CachePolicy
from .simcore.store import LFU, LRU, ContentStore


def ce2_on_miss(store: ContentStore, seg, size: float) -> list:
    """CE2 decision for data passing a router: always cache.  Returns evictions."""
    return store.insert(seg, size)


class CE2(CachePolicy):
    """Cache Everything Everywhere with LRU or LFU replacement."""

    def __init__(self, eviction: str = LFU):
        if eviction not in (LRU, LFU):
            raise InvalidParam(f"CE2 eviction must be lru or lfu, not {eviction!r}")
        self.eviction = eviction
        self.name = f"ce2-{eviction}"

    def make_store(self, node, capacity):
        return ContentStore(capacity, self.eviction)

    def on_delivery(self, stores, hit_hop, seg, size, rng):
        for cs in stores:
            ce2_on_miss(cs, seg, size)


def probcache_probability(x: int, c: int, t_tw: float = 10.0) -> float:
    """Homogeneous-cache ProbCache caching probability.

    ``x`` counts hops from the serving node toward the consumer (1 is the
    router next to the server, ``c`` the edge router) and ``c`` is the
    number of routers the data crosses.  The probability is
    ``((c - x + 1) / t_tw) * (x / c)`` clamped to ``[0, 1]``.
    """
    if not t_tw > 0:
        raise InvalidParam("t_tw must be > 0")
    if not 1 <= x <= c:
        raise InvalidParam(f"hop index {x} outside 1..{c}")
    p = ((c - x + 1) / t_tw) * (x / c)
    return min(1.0, max(0.0, p))


class ProbCache(CachePolicy):
    """Probabilistic on-path caching with LRU replacement."""

    name = "probcache"

    def __init__(self, t_tw: float = 10.0, eviction: str = LRU):
        if not t_tw > 0:
            raise InvalidParam("t_tw must be > 0")
        self.t_tw = t_tw
        self.eviction = eviction

    def make_store(self, node, capacity):
        return ContentStore(capacity, self.eviction)

    def on_delivery(self, stores, hit_hop, seg, size, rng):
        c = hit_hop - 1
        # stores are edge-first; walk them in the data's direction of travel
        for j in range(c, 0, -1):
            x = hit_hop - j
            if rng.random() < probcache_probability(x, c, self.t_tw):
                stores[j - 1].insert(seg, size)
