"""Video corpus, popularity model and session arrival schedule."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidParam

MBPS = 1e6


class SegmentId(NamedTuple):
    """Cacheable unit: file ``f`` (1..F), segment ``k`` (1..K), bitrate rank ``b`` (1..B)."""

    f: int
    k: int
    b: int

    def name(self) -> str:
        return f"/Video{self.f}/{self.k}/B{self.b}"


@dataclass(frozen=True)
class Catalog:
    n_files: int
    n_segments: int
    ladder: tuple[float, ...] = (1 * MBPS, 2.5 * MBPS, 5 * MBPS, 8 * MBPS)
    segment_duration: float = 4.0
    n_producers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "ladder", tuple(float(x) for x in self.ladder))
        if self.n_files < 1 or self.n_segments < 1:
            raise InvalidParam("catalog needs at least one file and one segment")
        if not self.ladder or any(x <= 0 for x in self.ladder):
            raise InvalidParam("bitrate ladder must be positive")
        if any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise InvalidParam("bitrate ladder must be strictly ascending")
        if self.segment_duration < 0:
            raise InvalidParam("segment duration must be >= 0")
        if self.n_producers < 1:
            raise InvalidParam("need at least one producer")

    @property
    def B(self) -> int:
        return len(self.ladder)

    def _check_rank(self, b: int):
        if not 1 <= b <= self.B:
            raise InvalidParam(f"bitrate rank {b} outside 1..{self.B}")

    def segment_size(self, b: int) -> float:
        """Bytes of one segment at rank ``b``."""
        self._check_rank(b)
        return self.ladder[b - 1] * self.segment_duration / 8.0

    @property
    def sizes(self) -> np.ndarray:
        return np.array(self.ladder) * self.segment_duration / 8.0

    def mu(self, b: int) -> float:
        """Size of rank ``b`` relative to the base rank."""
        self._check_rank(b)
        return self.ladder[b - 1] / self.ladder[0]

    @property
    def mu_table(self) -> tuple[float, ...]:
        return tuple(self.mu(b) for b in range(1, self.B + 1))

    @property
    def total_bytes(self) -> float:
        return float(self.n_files * self.n_segments * self.sizes.sum())

    def producer_index(self, f: int) -> int:
        """0-based index of the producer serving file ``f`` (round robin)."""
        return (f - 1) % self.n_producers

    def segments(self):
        for f in range(1, self.n_files + 1):
            for k in range(1, self.n_segments + 1):
                for b in range(1, self.B + 1):
                    yield SegmentId(f, k, b)


segment_size = Catalog.segment_size
mu = Catalog.mu


def zipf_weights(F: int, alpha: float) -> np.ndarray:
    """Normalised Zipf-like popularity ``w_f ∝ f**-alpha`` for f = 1..F."""
    if F < 1:
        raise InvalidParam("F must be >= 1")
    if alpha < 0:
        raise InvalidParam("alpha must be >= 0")
    w = np.arange(1, F + 1, dtype=np.float64) ** -float(alpha)
    return w / w.sum()


class Session(NamedTuple):
    consumer: int
    start: float
    file: int


@dataclass(frozen=True)
class SessionSchedule:
    sessions: tuple[Session, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.sessions)

    def __iter__(self):
        return iter(self.sessions)

    def before(self, t: float) -> "SessionSchedule":
        return SessionSchedule(tuple(s for s in self.sessions if s.start < t))


def sample_sessions(c: Catalog, consumers: Sequence[int], mean_interval: float,
                    horizon: float, seed: int, alpha: float = 1.2) -> SessionSchedule:
    """Independent Poisson session arrivals per consumer over ``[0, horizon)``.

    Each consumer draws from its own child stream of ``seed``, so adding a
    consumer does not perturb the others' schedules.
    """
    if not mean_interval > 0:
        raise InvalidParam("mean_interval must be > 0")
    weights = zipf_weights(c.n_files, alpha)
    out = []
    children = np.random.SeedSequence(seed).spawn(len(consumers))
    for cons, ss in zip(consumers, children):
        rng = np.random.default_rng(ss)
        t = rng.exponential(mean_interval)
        while t < horizon:
            f = int(rng.choice(c.n_files, p=weights)) + 1
            out.append(Session(int(cons), float(t), f))
            t += rng.exponential(mean_interval)
    out.sort(key=lambda s: (s.start, s.consumer))
    return SessionSchedule(tuple(out))
