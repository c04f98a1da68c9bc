"""Discrete-event delivery engine, content stores and statistics."""
from .engine import SessionTrace, SimConfig, TraceOutput, run_simulation
from .fairshare import fair_share_rates
from .policies import CachePolicy, NoCache, PeriodicPlacement, StaticPlacement
from .stats import RunningMean, StatsLedger, record_delivery
from .store import LFU, LRU, STATIC, ContentStore, cs_lookup_insert

__all__ = [
    "CachePolicy", "ContentStore", "LFU", "LRU", "NoCache", "PeriodicPlacement", "RunningMean",
    "STATIC", "SessionTrace", "SimConfig", "StaticPlacement", "StatsLedger",
    "TraceOutput", "cs_lookup_insert", "fair_share_rates", "record_delivery",
    "run_simulation",
]
