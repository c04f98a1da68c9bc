"""Ripple Bitrate extraction and the cache-hit reward function."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

from .catalog import Catalog
from .errors import InvalidParam, MissingStats
from .simcore.stats import StatsLedger
from .topology import Topology

MIN_SAMPLES = 3


def beta(rank: int, eta: float) -> float:
    """Quality-vs-stability weight ``1 / (eta + rank)``."""
    if rank < 1:
        raise InvalidParam("rank must be >= 1")
    if eta < 0:
        raise InvalidParam("eta must be >= 0")
    return 1.0 / (eta + rank)


def gamma(rb: int | None, b: int, mu: Sequence[float], eta: float) -> float:
    """Reward of a hit for rank ``b`` at a router whose Ripple Bitrate is ``rb``.

    ``mu`` is the size-ratio table indexed by ``rank - 1``; ``rb=None``
    means the router cannot sustain even the base rank.
    """
    n = len(mu)
    if not 1 <= b <= n:
        raise InvalidParam(f"rank {b} outside 1..{n}")
    if rb is None:
        return mu[0]
    if b == rb:
        return mu[b - 1]
    if b < rb:
        if b == n:
            return mu[b - 1]
        w = beta(b, eta)
        return mu[b] * w + mu[b - 1] * (1.0 - w)
    return mu[rb - 1]


def ripple_bitrate(stats: StatsLedger, edge: int, hop: int, segment_duration: float,
                   n_ranks: int | None = None, producer: int = 0,
                   min_samples: int = MIN_SAMPLES) -> int | None:
    """Highest rank whose mean delivery delay from ``hop`` meets the deadline.

    Means backed by fewer than ``min_samples`` samples are ignored.  Raises
    :class:`MissingStats` when no rank at this hop has enough samples, and
    returns ``None`` when none of the observed ranks meets the deadline.
    """
    if n_ranks is None:
        n_ranks = max((k[3] for k in stats.delays if k[0] == edge), default=0)
    observed = False
    best = None
    for b in range(1, n_ranks + 1):
        m = stats.mean_delay(edge, hop, b, producer, min_samples)
        if m is None:
            continue
        observed = True
        if m <= segment_duration:
            best = b
    if not observed:
        raise MissingStats(f"no delay statistics for edge {edge}, hop {hop}")
    return best


@dataclass
class RippleBitrateTable:
    """``rb[(d, p)][i - 1]`` is the Ripple Bitrate of hop ``i`` on path ``[d, p]``.

    ``estimated`` marks hops whose value was filled in rather than measured.
    """

    rb: dict
    estimated: dict

    def get(self, d: int, p: int, hop: int) -> int | None:
        return self.rb[(d, p)][hop - 1]

    def to_csv(self, fh):
        w = csv.writer(fh)
        w.writerow(["edge", "producer", "hop", "rb", "estimated"])
        for (d, p), row in sorted(self.rb.items()):
            for i, v in enumerate(row, start=1):
                w.writerow([d, p, i, "" if v is None else v, int(self.estimated[(d, p)][i - 1])])


def edge_delivery_delay(topology: Topology, d: int, size_bytes: float) -> float:
    """Uncontended time to deliver one segment from edge router ``d``.

    Only the consumer access link is crossed; the slowest attached consumer
    is assumed.
    """
    cons = [topology.consumers[c] for c in topology.consumers_of(d)]
    if not cons:
        return 0.0
    return max(2 * c.delay + size_bytes * 8.0 / c.bandwidth for c in cons)


def _hop_delays(stats, d, p, L, n_ranks, mu, min_samples):
    """Measured means, with unmeasured ranks scaled from the best-sampled rank of the same hop."""
    table = {}
    for hop in range(1, L + 1):
        means = {b: stats.mean_delay(d, hop, b, p, min_samples) for b in range(1, n_ranks + 1)}
        known = [b for b, m in means.items() if m is not None]
        if not known:
            continue
        ref = max(known, key=lambda b: (stats.sample_count(d, hop, b, p), b))
        table[hop] = {b: (m if m is not None else means[ref] * mu[b - 1] / mu[ref - 1])
                      for b, m in means.items()}
    return table


def estimate_path_delays(stats: StatsLedger, topology: Topology, catalog: Catalog,
                         d: int, p: int, min_samples: int = MIN_SAMPLES):
    """Mean delay per ``(hop, rank)`` on path ``[d, p]``, filling unobserved cells.

    Returns ``(delays, estimated)`` where ``delays[hop - 1][b - 1]`` is a
    float or ``None`` (path never observed) and ``estimated`` flags filled
    cells.  A hop with no samples at all is interpolated linearly in hop
    index between the nearest observed hops on either side; the lower end
    defaults to an uncontended delivery from the edge router and the upper
    end, when missing, repeats the nearest observed hop below.
    """
    L = topology.path(d, p).L
    mu = catalog.mu_table
    n = catalog.B
    seen = _hop_delays(stats, d, p, L, n, mu, min_samples)
    delays, flags = [], []
    for hop in range(1, L + 1):
        row, frow = [], []
        for b in range(1, n + 1):
            measured = stats.mean_delay(d, hop, b, p, min_samples)
            if measured is not None:
                row.append(measured)
                frow.append(False)
                continue
            frow.append(True)
            if hop in seen:
                row.append(seen[hop][b])
                continue
            if not seen:
                row.append(None)
                continue
            below = [h for h in seen if h < hop]
            above = [h for h in seen if h > hop]
            if below:
                lo_h = max(below)
                lo = seen[lo_h][b]
            else:
                lo_h, lo = 1, edge_delivery_delay(topology, d, catalog.segment_size(b))
            if above:
                hi_h = min(above)
                hi = seen[hi_h][b]
                row.append(lo + (hi - lo) * (hop - lo_h) / (hi_h - lo_h) if hi_h != lo_h else hi)
            else:
                row.append(lo)
        delays.append(row)
        flags.append(frow)
    return delays, flags


def ripple_bitrate_table(stats: StatsLedger, topology: Topology, catalog: Catalog,
                         edges: Sequence[int] | None = None,
                         min_samples: int = MIN_SAMPLES) -> RippleBitrateTable:
    """Ripple Bitrate for every hop of every edge-to-producer path.

    Cells with at least ``min_samples`` delay samples use the measured mean;
    the rest come from :func:`estimate_path_delays`.  A hop is flagged as
    estimated when any of its cells was filled.  Paths with no statistics
    at all get ``None`` throughout.
    """
    dur = catalog.segment_duration
    rb, est = {}, {}
    for d in (edges if edges is not None else topology.edges):
        for p in topology.producers:
            delays, flags = estimate_path_delays(stats, topology, catalog, d, p, min_samples)
            row = []
            for cells in delays:
                best = None
                for b, m in enumerate(cells, start=1):
                    if m is not None and m <= dur:
                        best = b
                row.append(best)
            rb[(d, p)] = row
            est[(d, p)] = [any(f) for f in flags]
    return RippleBitrateTable(rb, est)
