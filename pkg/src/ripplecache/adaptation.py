"""Throughput-based bitrate adaptation with buffer and rebuffer accounting.

A simplified FESTIVE-style controller: harmonic-mean bandwidth estimate over
the last ``window`` segments, immediate down-switch when the current rate
exceeds ``drop_threshold`` times the estimate, and gradual one-rung
up-switching gated by a patience counter and a stability/efficiency score.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyWindow, InvalidParam


@dataclass(frozen=True)
class AdaptationParams:
    drop_threshold: float = 0.8
    combine_weight: float = 8.0
    window: int = 5
    upshift_patience: int = 2
    buffer_target: float = 16.0
    stability_window: int = 5

    def __post_init__(self):
        if not 0 < self.drop_threshold <= 1:
            raise InvalidParam("drop_threshold must be in (0, 1]")
        if self.window < 1 or self.upshift_patience < 1 or self.stability_window < 1:
            raise InvalidParam("window, patience and stability_window must be >= 1")
        if self.combine_weight < 0 or self.buffer_target <= 0:
            raise InvalidParam("invalid combine_weight or buffer_target")


def estimate_bandwidth(window: Sequence[float]) -> float:
    """Harmonic mean of per-segment throughput samples (bits/second)."""
    if len(window) == 0:
        raise EmptyWindow("no throughput samples")
    inv = 0.0
    for x in window:
        if x <= 0:
            return 0.0
        inv += 1.0 / x
    return len(window) / inv


@dataclass
class ClientState:
    """Per-session player state.

    ``buffer_level`` is the buffered media in seconds at the last state
    update; the engine drains it explicitly with :meth:`drain` while the
    client idles for pacing.
    """

    params: AdaptationParams = field(default_factory=AdaptationParams)
    current_bitrate: int = 1
    throughput_window: deque = None
    buffer_level: float = 0.0
    rebuffer_intervals: list = field(default_factory=list)
    consecutive_up_count: int = 0
    recent_switches: deque = None
    started: bool = False
    decisions: int = 0

    def __post_init__(self):
        if self.throughput_window is None:
            self.throughput_window = deque(maxlen=self.params.window)
        if self.recent_switches is None:
            self.recent_switches = deque(maxlen=self.params.stability_window)

    @property
    def rebuffer_time(self) -> float:
        return sum(e - s for s, e in self.rebuffer_intervals)

    def add_throughput(self, bps: float):
        self.throughput_window.append(float(bps))

    def drain(self, dt: float):
        if dt < 0:
            raise InvalidParam("negative drain interval")
        self.buffer_level = max(0.0, self.buffer_level - dt)

    def on_segment_done(self, delay: float, duration: float, now: float | None = None):
        """Account one segment that arrived ``delay`` seconds after its request.

        Returns the rebuffer interval ``(start, end)`` opened and closed by
        this arrival, or ``None``.  The buffer drains while the segment is
        in flight; if it runs dry the player freezes until the arrival.  The
        first segment's wait is startup delay, not rebuffering.
        """
        if delay < 0:
            raise InvalidParam("delay must be >= 0")
        stall = None
        if self.started:
            short = delay - self.buffer_level
            if short > 0:
                end = now if now is not None else delay
                stall = (end - short, end)
                self.rebuffer_intervals.append(stall)
            self.buffer_level = max(0.0, self.buffer_level - delay)
        else:
            self.started = True
            self.buffer_level = 0.0
        self.buffer_level += duration
        return stall

    def pacing_wait(self, duration: float) -> float:
        """Idle time before the next request keeps the buffer at or below target."""
        return max(0.0, self.buffer_level - (self.params.buffer_target - duration))


def next_bitrate(state: ClientState, params: AdaptationParams,
                 ladder: Sequence[float]) -> int:
    """Choose the rank of the next request and update the switch counters.

    The reference rung is the highest rate not above the bandwidth estimate.
    Down-switches happen at once (to the reference, at least one rung);
    up-switches go one rung at a time after ``upshift_patience`` eligible
    decisions, and only when the combined score (``2**n`` stability cost
    for ``n`` recent switches plus ``combine_weight`` times the efficiency
    gap) favours the switch.
    """
    n = len(ladder)
    cur = min(max(state.current_bitrate, 1), n)
    if not state.throughput_window:
        target = 1
        state.consecutive_up_count = 0
    else:
        est = estimate_bandwidth(state.throughput_window)
        ref = 1
        for r in range(n, 0, -1):
            if ladder[r - 1] <= est:
                ref = r
                break
        if cur > 1 and ladder[cur - 1] > params.drop_threshold * est:
            target = max(1, min(ref, cur - 1))
            state.consecutive_up_count = 0
        elif ref > cur:
            state.consecutive_up_count += 1
            target = cur
            if state.consecutive_up_count >= params.upshift_patience:
                n_sw = sum(state.recent_switches)
                ref_rate = min(est, ladder[ref - 1])
                stay = 2.0 ** n_sw + params.combine_weight * abs(ladder[cur - 1] / ref_rate - 1)
                up = 2.0 ** (n_sw + 1) + params.combine_weight * abs(ladder[cur] / ref_rate - 1)
                if up < stay:
                    target = cur + 1
                    state.consecutive_up_count = 0
        else:
            target = cur
            state.consecutive_up_count = 0
    if state.decisions > 0:
        state.recent_switches.append(1 if target != state.current_bitrate else 0)
    state.decisions += 1
    state.current_bitrate = target
    return target
