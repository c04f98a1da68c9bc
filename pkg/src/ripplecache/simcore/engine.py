"""Discrete-event, fluid-flow simulator for segment delivery through caches.

Requests travel from a consumer up its edge router's forwarding path until
the first store holding the exact segment (or the producer).  The data then
flows back as a fluid transfer whose rate is the max-min fair share over
the links it crosses, recomputed whenever a flow starts or finishes.
"""
from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..adaptation import AdaptationParams, ClientState, next_bitrate
from ..catalog import Catalog, SegmentId, SessionSchedule
from ..errors import ConfigError
from ..topology import Topology
from .policies import CachePolicy
from .stats import StatsLedger

_START, _REQUEST, _FLOW, _ARRIVE, _REPLAN = 0, 1, 2, 3, 4
_DONE_EPS = 1e-6  # bytes


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    adaptation: AdaptationParams = field(default_factory=AdaptationParams)
    stop_time: float | None = None
    log_hits: bool = False
    check_invariants: bool = False


@dataclass
class SessionTrace:
    session_id: int
    consumer: int
    edge: int
    file: int
    start: float
    bitrates: list = field(default_factory=list)
    delays: list = field(default_factory=list)
    hit_hops: list = field(default_factory=list)
    arrivals: list = field(default_factory=list)
    rebuffer_intervals: list = field(default_factory=list)
    play_start: float | None = None
    end_time: float | None = None
    aborted: bool = False

    @property
    def rebuffer_time(self) -> float:
        return sum(e - s for s, e in self.rebuffer_intervals)


@dataclass
class TraceOutput:
    sessions: list
    deliveries: list
    stats: StatsLedger
    hit_log: list = field(default_factory=list)
    requests: int = 0
    completed: int = 0
    aborted: int = 0
    events: int = 0
    replans: int = 0
    stores: dict = field(default_factory=dict)

    CSV_HEADER = "time,consumer,f,k,b,hit_hop,delay_s,buffer_s"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.CSV_HEADER + "\n")
        for row in self.deliveries:
            t, cons, f, k, b, hop, delay, bufl = row
            buf.write(f"{t!r},{cons},{f},{k},{b},{hop},{delay!r},{bufl!r}\n")
        return buf.getvalue()

    def hit_log_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,node,f,k,b,hit\n")
        for t, node, seg, hit in self.hit_log:
            buf.write(f"{t!r},{node},{seg.f},{seg.k},{seg.b},{int(hit)}\n")
        return buf.getvalue()


class _Route:
    """Per (consumer, producer) forwarding data, indexed by serving hop."""

    __slots__ = ("edge", "producer", "nodes", "links", "delay")

    def __init__(self, topo: Topology, consumer, producer, access_link):
        path = topo.path(consumer.edge, producer)
        self.edge = consumer.edge
        self.producer = producer
        self.nodes = path.nodes
        links = [(access_link,)]
        delay = [consumer.delay]
        for i in range(1, path.L):
            a, b = path.nodes[i - 1], path.nodes[i]
            idx = topo.link_index(a, b)
            ln = topo.links[idx]
            # data flows from b down to a; direction picks the directed slot
            directed = 2 * idx + (0 if ln.a == b else 1)
            links.append(links[-1] + (directed,))
            delay.append(delay[-1] + ln.delay)
        self.links = links   # links[h-1]: links crossed when served from hop h
        self.delay = delay   # delay[h-1]: one-way propagation consumer <-> hop h


def run_simulation(t: Topology, c: Catalog, policy: CachePolicy,
                   sched: SessionSchedule, cfg: SimConfig | None = None) -> TraceOutput:
    """Run one simulation and return its trace.

    Sessions request segments ``1..K`` in order; each request is issued when
    the previous segment has arrived and the buffer has room.  The run ends
    when every session has finished, or at ``cfg.stop_time`` when given (in
    which case unfinished sessions are recorded as aborted).
    """
    cfg = cfg or SimConfig()
    params = cfg.adaptation
    producers = tuple(sorted(t.producers))
    if c.n_producers != len(producers):
        raise ConfigError(f"catalog expects {c.n_producers} producers, topology has {len(producers)}")
    for s in sched:
        if s.consumer not in t.consumers:
            raise ConfigError(f"schedule references unknown consumer {s.consumer}")
        if not 1 <= s.file <= c.n_files:
            raise ConfigError(f"schedule references file {s.file} outside the catalog")

    rng = np.random.default_rng(cfg.seed)
    stores = {v: policy.make_store(v, t.capacity(v)) for v in t.routers}
    consumer_ids = sorted(t.consumers)
    n_links = len(t.links)
    caps = []
    for ln in t.links:
        caps += [ln.bandwidth, ln.bandwidth]
    access = {}
    for pos, cid in enumerate(consumer_ids):
        access[cid] = 2 * n_links + pos
        caps.append(t.consumers[cid].bandwidth)
    capacity = np.asarray(caps, dtype=np.float64)
    n_dlinks = capacity.shape[0]
    routes = {}

    def route(cid, f):
        p = producers[c.producer_index(f)]
        key = (cid, p)
        if key not in routes:
            routes[key] = _Route(t, t.consumers[cid], p, access[cid])
        return routes[key]

    sizes = c.sizes
    ladder = c.ladder
    dur = c.segment_duration
    K = c.n_segments
    stats = StatsLedger()
    out = TraceOutput([], [], stats)

    heap = []
    seq = 0

    def push(time, kind, data):
        nonlocal seq
        heapq.heappush(heap, (time, seq, kind, data))
        seq += 1

    sessions: dict[int, SessionTrace] = {}
    for sid, s in enumerate(sched):
        push(s.start, _START, sid)
    interval = policy.replan_interval
    if interval and len(sched):
        push(interval, _REPLAN, None)

    # active flows, kept as parallel arrays
    flow_sid: list[int] = []
    flow_rows = np.zeros((0, n_dlinks), dtype=np.bool_)
    remaining = np.zeros(0)
    rates = np.zeros(0)

    # per-session in-flight request: (k, seg, hop, issue_time, route)
    pending = {}
    states = {}

    def issue(sid, k, now):
        tr = sessions[sid]
        st = states[sid]
        rank = next_bitrate(st, params, ladder)
        seg = SegmentId(tr.file, k, rank)
        r = route(tr.consumer, tr.file)
        stats.count_request(r.edge, seg)
        L = len(r.nodes)
        hop = L
        for i in range(L - 1):
            cs = stores[r.nodes[i]]
            if seg in cs:
                hop = i + 1
                policy.on_hit(cs, seg)
                if cfg.log_hits:
                    out.hit_log.append((now, r.nodes[i], seg, True))
                break
            if cfg.log_hits:
                out.hit_log.append((now, r.nodes[i], seg, False))
        pending[sid] = (k, seg, hop, now, r)
        out.requests += 1
        push(now + r.delay[hop - 1], _FLOW, sid)

    def arrive(sid, now):
        k, seg, hop, issued, r = pending.pop(sid)
        tr = sessions[sid]
        st = states[sid]
        delay = now - issued
        size = sizes[seg.b - 1]
        stats.record_delivery(r.edge, hop, seg.b, delay, r.producer)
        if hop > 1:
            policy.on_delivery([stores[v] for v in r.nodes[:hop - 1]], hop, seg, size, rng)
            if cfg.check_invariants:
                for v in r.nodes[:hop - 1]:
                    stores[v].check()
        st.add_throughput(size * 8.0 / delay if delay > 0 else math.inf)
        stall = st.on_segment_done(delay, dur, now)
        if stall is not None:
            tr.rebuffer_intervals.append(stall)
        if tr.play_start is None:
            tr.play_start = now
        tr.bitrates.append(seg.b)
        tr.delays.append(delay)
        tr.hit_hops.append(hop)
        tr.arrivals.append(now)
        out.deliveries.append((now, tr.consumer, seg.f, seg.k, seg.b, hop, delay, st.buffer_level))
        out.completed += 1
        if k < K:
            wait = st.pacing_wait(dur)
            st.drain(wait)
            push(now + wait, _REQUEST, (sid, k + 1))
        else:
            tr.end_time = now + st.buffer_level

    def reallocate():
        nonlocal rates
        if flow_sid:
            rates = kernels.maxmin_rates(flow_rows, capacity)
        else:
            rates = np.zeros(0)

    now = 0.0
    stop = cfg.stop_time if cfg.stop_time is not None else math.inf
    while heap or flow_sid:
        t_evt = heap[0][0] if heap else math.inf
        if flow_sid:
            t_done = now + float(np.min(remaining * 8.0 / rates))
        else:
            t_done = math.inf
        t_next = min(t_evt, t_done)
        if t_next > stop:
            break
        out.events += 1
        if flow_sid:
            remaining = remaining - rates * ((t_next - now) / 8.0)
        now = t_next
        if t_done <= t_evt:
            done = remaining <= _DONE_EPS
            done[int(np.argmin(remaining))] = True
            finished = [sid for sid, d in zip(flow_sid, done) if d]
            keep = ~done
            flow_sid = [sid for sid, d in zip(flow_sid, done) if not d]
            flow_rows = flow_rows[keep]
            remaining = remaining[keep]
            reallocate()
            for sid in finished:
                r = pending[sid][4]
                push(now + r.delay[pending[sid][2] - 1], _ARRIVE, sid)
            continue
        _, _, kind, data = heapq.heappop(heap)
        if kind == _START:
            s = sched.sessions[data]
            sessions[data] = SessionTrace(data, s.consumer, t.consumers[s.consumer].edge, s.file, now)
            states[data] = ClientState(params)
            issue(data, 1, now)
        elif kind == _REQUEST:
            sid, k = data
            issue(sid, k, now)
        elif kind == _REPLAN:
            if policy.replan(now, stats):
                for v in stores:
                    stores[v] = policy.make_store(v, t.capacity(v))
            out.replans += 1
            if heap or flow_sid:
                push(now + interval, _REPLAN, None)
        elif kind == _FLOW:
            k, seg, hop, issued, r = pending[data]
            row = np.zeros((1, n_dlinks), dtype=np.bool_)
            row[0, list(r.links[hop - 1])] = True
            flow_sid.append(data)
            flow_rows = np.vstack([flow_rows, row])
            remaining = np.append(remaining, sizes[seg.b - 1])
            reallocate()
        else:
            arrive(data, now)

    for sid in sorted(pending):
        sessions[sid].aborted = True
        sessions[sid].end_time = now
        out.aborted += 1
    out.sessions = [sessions[sid] for sid in sorted(sessions)]
    for tr in out.sessions:
        if tr.end_time is None:
            tr.aborted = True
            tr.end_time = now
    if cfg.check_invariants:
        for cs in stores.values():
            cs.check()
        assert out.requests == out.completed + out.aborted, "request conservation violated"
    out.stores = {v: cs.keys() for v, cs in stores.items()}
    return out
