"""Per-session QoE metrics and confidence-interval summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .errors import InvalidParam


@dataclass(frozen=True)
class SessionQoE:
    avg_bitrate: float      # bits per second
    switch_count: int
    down_switches: int
    rebuffer_pct: float     # fraction of active time
    session_id: int
    consumer: int


def store_size_from_omega(total_video_bytes: float, n_routers: int, omega: float) -> float:
    """Per-router content store size: corpus share per router scaled by ``omega``."""
    if n_routers < 1:
        raise InvalidParam("n_routers must be >= 1")
    if omega < 0:
        raise InvalidParam("omega must be >= 0")
    return total_video_bytes / n_routers * omega


def count_switches(ranks: Sequence[int]) -> tuple[int, int]:
    """Return ``(all switches, downward switches)`` between consecutive segments."""
    ups = downs = 0
    for a, b in zip(ranks, ranks[1:]):
        if b > a:
            ups += 1
        elif b < a:
            downs += 1
    return ups + downs, downs


def session_qoe(trace, ladder: Sequence[float]) -> SessionQoE:
    """QoE of one session trace.

    Average bitrate is taken over the segments actually requested.  Active
    time runs from the session start to the end of playback (or the abort
    time); only stalls after playback began count as frozen.
    """
    ranks = list(trace.bitrates)
    avg = float(np.mean([ladder[b - 1] for b in ranks])) if ranks else 0.0
    switches, downs = count_switches(ranks)
    active = (trace.end_time or trace.start) - trace.start
    frozen = trace.rebuffer_time
    pct = min(1.0, frozen / active) if active > 0 else 0.0
    return SessionQoE(avg, switches, downs, pct, trace.session_id, trace.consumer)


def mean_ci(values: Iterable[float], confidence: float = 0.95) -> tuple[float, float]:
    """Sample mean and Student-t half width; half width is 0 for fewer than two values."""
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    m = float(x.mean())
    if x.size < 2:
        return m, 0.0
    sem = float(x.std(ddof=1)) / math.sqrt(x.size)
    return m, float(sps.t.ppf(0.5 + confidence / 2, x.size - 1) * sem)


@dataclass(frozen=True)
class RunQoE:
    avg_bitrate_mbps: float
    switch_count_mean: float
    down_switch_mean: float
    rebuffer_pct_mean: float
    n_sessions: int


def summarize_sessions(qoes: Sequence[SessionQoE]) -> RunQoE:
    if not qoes:
        return RunQoE(math.nan, math.nan, math.nan, math.nan, 0)
    return RunQoE(
        float(np.mean([q.avg_bitrate for q in qoes])) / 1e6,
        float(np.mean([q.switch_count for q in qoes])),
        float(np.mean([q.down_switches for q in qoes])),
        float(np.mean([q.rebuffer_pct for q in qoes])),
        len(qoes),
    )
