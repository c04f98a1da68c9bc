"""Distributed, path-oriented cache partitioning heuristic.

Every edge router ranks segments by utility ``mu(b) * theta_d`` per
bitrate, treats the caches on each of its forwarding paths as one logical
volume, selects content with per-bitrate stacks and nominates it hop by
hop, highest bitrates nearest the consumer.  Each router then merges the
nominations it receives, keeps the entries with the largest summed utility,
and reports back how much of its space each path actually got.  Those
volumes feed the next round until they stop changing.

Everything runs in one process; the message exchange between routers is
plain data passing.
"""
from __future__ import annotations

import csv
import logging
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .catalog import Catalog, SegmentId
from .ripple_classic import PlacementSolution
from .topology import Topology

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 5


def entry_key(seg: SegmentId, utility: float):
    """Global ordering: utility descending, then bitrate descending, then (f, k)."""
    return (-utility, -seg.b, seg.f, seg.k)


@dataclass
class RankingTable:
    """Per-bitrate lists of ``(segment, utility)``, best first."""

    edge: int
    tables: dict = field(default_factory=dict)

    def __getitem__(self, b):
        return self.tables.get(b, [])

    def bitrates(self):
        return sorted(self.tables, reverse=True)


def build_ranking_tables(theta: Mapping, catalog: Catalog, edge: int,
                         files: Iterable[int] | None = None) -> RankingTable:
    """Rank the segments requested at ``edge`` by ``mu(b) * theta``.

    ``theta`` maps edge -> {segment: count} (a stats ledger's ``theta``
    works).  ``files`` restricts the table to one producer's content.
    """
    keep = None if files is None else set(files)
    mu = catalog.mu_table
    tables: dict = defaultdict(list)
    for seg, n in theta.get(edge, {}).items():
        if keep is not None and seg.f not in keep:
            continue
        tables[seg.b].append((seg, mu[seg.b - 1] * n))
    for b in tables:
        tables[b].sort(key=lambda e: entry_key(*e))
    return RankingTable(edge, dict(tables))


@dataclass
class PathCapacity:
    """Cache volume dedicated to one path at each router hop (edge first)."""

    routers: tuple
    volumes: list

    @property
    def total(self) -> float:
        return float(sum(self.volumes))


def discover_capacity(routers: Sequence[int], topology: Topology,
                      volumes: Sequence[float] | None = None) -> PathCapacity:
    """Start from whole router caches, or from the volumes reported last round."""
    if volumes is None:
        volumes = [topology.capacity(v) for v in routers]
    return PathCapacity(tuple(routers), [float(c) for c in volumes])


@dataclass
class CacheStacks:
    stacks: dict          # b -> list of (seg, U), bottom (best) first
    complete: set
    popped: list

    def size(self, size_of) -> float:
        return sum(size_of(s) for st in self.stacks.values() for s, _ in st)

    def entries(self):
        for b in sorted(self.stacks, reverse=True):
            yield from self.stacks[b]


def push_pop(table: RankingTable, capacity: float, size_of) -> CacheStacks:
    """Fill per-bitrate stacks, highest bitrate first, within ``capacity``.

    Whenever the stacked size exceeds the capacity, the lowest-utility stack
    top is popped until it fits again.  Popping from the stack being filled
    marks it complete and moves on to the next bitrate.  Filling ends when
    the lowest bitrate is complete or every table is exhausted.
    """
    order = table.bitrates()
    stacks = {b: [] for b in order}
    complete: set = set()
    popped: list = []
    used = 0.0
    for b in order:
        for seg, u in table[b]:
            stacks[b].append((seg, u))
            used += size_of(seg)
            hit_self = False
            while used > capacity and any(stacks.values()):
                victim = max((bb for bb in order if stacks[bb]),
                             key=lambda bb: entry_key(*stacks[bb][-1]))
                s, uu = stacks[victim].pop()
                used -= size_of(s)
                popped.append((s, uu))
                hit_self = hit_self or victim == b
            if hit_self:
                break
        complete.add(b)
    return CacheStacks(stacks, complete, popped)


@dataclass
class CCT:
    """Entries one edge router nominates for the router at ``hop``."""

    hop: int
    router: int
    cap: float
    entries: list = field(default_factory=list)
    used: float = 0.0

    def segments(self) -> list:
        return [s for s, _ in self.entries]


def nominate_cct(stacks: CacheStacks, capacity: PathCapacity, size_of) -> list:
    """Pour the stacks into per-hop tables, edge router first.

    Entries go in stack order (highest bitrate, best utility first).  An
    entry that does not fit in the current table moves the cursor one hop
    coreward; the cursor never moves back, so bitrates never increase
    toward the core.  Entries that fit in no remaining table are dropped.
    """
    ccts = [CCT(j + 1, v, capacity.volumes[j]) for j, v in enumerate(capacity.routers)]
    j = 0
    for seg, u in stacks.entries():
        sz = size_of(seg)
        while j < len(ccts) and ccts[j].used + sz > ccts[j].cap + 1e-9:
            j += 1
        if j == len(ccts):
            break
        ccts[j].entries.append((seg, u))
        ccts[j].used += sz
    return ccts


def negotiate(ccts: Iterable[CCT], capacity: float, size_of) -> tuple[list, dict]:
    """Merge the tables nominated to one router and fill it by summed utility.

    Returns the stored segments in ranking order and the summed utilities.
    Entries that no longer fit are skipped and smaller ones still considered.
    """
    summed: dict = defaultdict(float)
    for cct in ccts:
        for seg, u in cct.entries:
            summed[seg] += u
    ranked = sorted(summed.items(), key=lambda e: entry_key(*e))
    placed, used = [], 0.0
    for seg, _ in ranked:
        sz = size_of(seg)
        if used + sz <= capacity + 1e-9:
            placed.append(seg)
            used += sz
    return placed, dict(summed)


def update_volumes(placed: Iterable[SegmentId], cct: CCT, previous: float, size_of) -> float:
    """Volume a router now dedicates to one path.

    When every nominated entry was accepted the previous volume stands;
    otherwise it is the size of the accepted entries.
    """
    held = set(placed)
    kept = [s for s in cct.segments() if s in held]
    if len(kept) == len(cct.entries):
        return previous
    return float(sum(size_of(s) for s in kept))


@dataclass
class FinderRound:
    volumes: dict         # (d, p) -> per-hop volumes used for nomination
    new_volumes: dict     # (d, p) -> per-hop volumes after the update
    ccts: dict            # (d, p) -> list of CCT
    placement: dict       # router -> list of segments


def run_ripple_finder(topology: Topology, stats, catalog: Catalog,
                      max_iters: int = DEFAULT_MAX_ITERS,
                      keep_history: bool = True) -> PlacementSolution:
    """Iterate nomination and negotiation until per-path volumes settle.

    ``stats`` is anything with a ``theta`` mapping (edge -> segment ->
    count).  With ``max_iters=0`` a single nomination at full router
    capacity is negotiated and returned unconverged.
    """
    theta = stats.theta if hasattr(stats, "theta") else stats
    producers = tuple(sorted(topology.producers))
    size_of = lambda s: catalog.segment_size(s.b)  # noqa: E731
    files_of = defaultdict(list)
    for f in range(1, catalog.n_files + 1):
        files_of[producers[catalog.producer_index(f)]].append(f)

    paths = {}
    tables = {}
    for d in topology.edges:
        for p in producers:
            paths[(d, p)] = topology.path(d, p).routers
            tables[(d, p)] = build_ranking_tables(theta, catalog, d, files_of[p])
    volumes = {key: discover_capacity(r, topology).volumes for key, r in paths.items()}

    history: list[FinderRound] = []
    converged = False
    placement: dict = {}
    last = {}
    rounds = max(1, max_iters)
    it = 0
    for it in range(1, rounds + 1):
        ccts = {}
        inbox = defaultdict(list)
        stacks_of = {}
        for key, routers in paths.items():
            cap = discover_capacity(routers, topology, volumes[key])
            st = push_pop(tables[key], cap.total, size_of)
            stacks_of[key] = st
            ccts[key] = nominate_cct(st, cap, size_of)
            for cct in ccts[key]:
                inbox[cct.router].append(cct)
        placement = {}
        for v in topology.routers:
            placement[v], _ = negotiate(inbox.get(v, ()), topology.capacity(v), size_of)
        new_volumes = {}
        for key in paths:
            new_volumes[key] = [update_volumes(placement[c.router], c, volumes[key][c.hop - 1], size_of)
                                for c in ccts[key]]
        if keep_history:
            history.append(FinderRound({k: list(v) for k, v in volumes.items()},
                                       new_volumes, ccts, placement))
        last = dict(stacks=stacks_of, ccts=ccts)
        if max_iters == 0:
            break
        unchanged = all(new_volumes[k] == volumes[k] for k in paths)
        volumes = new_volumes
        if unchanged:
            converged = True
            break
    if not converged:
        log.info("volumes still changing after %d rounds; returning last placement", it)

    x = {v: frozenset(segs) for v, segs in placement.items()}
    utility = 0.0
    for v, segs in placement.items():
        held = set(segs)
        for key, cl in last.get("ccts", {}).items():
            for c in cl:
                if c.router == v:
                    utility += sum(u for s, u in c.entries if s in held)
    status = "converged" if converged else "not_converged"
    info = dict(iterations=it if max_iters else 0, converged=converged, history=history,
                tables=tables, volumes=volumes, **last)
    return PlacementSolution(x, utility, optimal=False, status=status, info=info)


def dump_internals(sol: PlacementSolution, out_dir: str) -> list[str]:
    """Write ranking tables, final stacks and CCTs as CSV files; return paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _open(name):
        path = os.path.join(out_dir, name)
        written.append(path)
        return open(path, "w", newline="")

    with _open("ranking_tables.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["edge", "producer", "b", "position", "f", "k", "utility"])
        for (d, p), t in sorted(sol.info["tables"].items()):
            for b in t.bitrates():
                for i, (s, u) in enumerate(t[b], start=1):
                    w.writerow([d, p, b, i, s.f, s.k, repr(u)])
    with _open("stacks.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["edge", "producer", "b", "depth", "f", "k", "utility", "complete"])
        for (d, p), st in sorted(sol.info.get("stacks", {}).items()):
            for b in sorted(st.stacks, reverse=True):
                for i, (s, u) in enumerate(st.stacks[b], start=1):
                    w.writerow([d, p, b, i, s.f, s.k, repr(u), int(b in st.complete)])
    with _open("ccts.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["edge", "producer", "hop", "router", "cap", "f", "k", "b", "utility"])
        for (d, p), cl in sorted(sol.info.get("ccts", {}).items()):
            for c in cl:
                for s, u in c.entries:
                    w.writerow([d, p, c.hop, c.router, repr(c.cap), s.f, s.k, s.b, repr(u)])
    with _open("volumes.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "edge", "producer", "hop", "volume_in", "volume_out"])
        for i, rnd in enumerate(sol.info.get("history", []), start=1):
            for (d, p), vols in sorted(rnd.volumes.items()):
                for j, (a, b) in enumerate(zip(vols, rnd.new_volumes[(d, p)]), start=1):
                    w.writerow([i, d, p, j, repr(a), repr(b)])
    return written
