"""Cache network graph, least-delay forwarding paths and topology generators."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from .errors import (DisconnectedGraph, DuplicateNode, InvalidParam,
                     MissingProducer, NoPath, TopologyError)

PRODUCER = "producer"
EDGE = "edge"
INTERMEDIATE = "intermediate"
ROLES = (PRODUCER, EDGE, INTERMEDIATE)

DEFAULT_BANDWIDTH = 20e6
DEFAULT_DELAY = 0.002


@dataclass(frozen=True)
class Node:
    id: int
    role: str
    cache_bytes: float = 0.0


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    bandwidth: float
    delay: float


@dataclass(frozen=True)
class Consumer:
    """A consumer attachment: served exclusively by one edge router."""

    id: int
    edge: int
    bandwidth: float = DEFAULT_BANDWIDTH
    delay: float = DEFAULT_DELAY


@dataclass(frozen=True)
class Path:
    """Forwarding path ``[d, p]``; ``nodes[0]`` is the edge, ``nodes[-1]`` the producer."""

    nodes: tuple[int, ...]
    delay: float

    @property
    def L(self) -> int:
        return len(self.nodes)

    @property
    def edge(self) -> int:
        return self.nodes[0]

    @property
    def producer(self) -> int:
        return self.nodes[-1]

    def hop(self, i: int) -> int:
        """Router at 1-based hop ``i``."""
        return self.nodes[i - 1]

    def hop_of(self, node: int) -> int | None:
        try:
            return self.nodes.index(node) + 1
        except ValueError:
            return None

    @property
    def routers(self) -> tuple[int, ...]:
        """Caching routers on the path (every hop but the producer)."""
        return self.nodes[:-1]


class Topology:
    """Validated, immutable cache network.

    Producers hold every object of the files they serve, so their
    ``cache_bytes`` is reported as ``inf`` regardless of the input value.
    """

    def __init__(self, nodes: Iterable[Node], links: Iterable[Link],
                 consumers: Iterable[Consumer] = ()):
        nodes = tuple(nodes)
        links = tuple(links)
        consumers = tuple(consumers)
        ids = [n.id for n in nodes]
        seen = set()
        for i in ids:
            if i in seen:
                raise DuplicateNode(f"node {i} declared twice")
            seen.add(i)
        for n in nodes:
            if n.role not in ROLES:
                raise TopologyError(f"node {n.id}: unknown role {n.role!r}")
            if n.cache_bytes < 0:
                raise TopologyError(f"node {n.id}: negative cache size")
        self.nodes: dict[int, Node] = {
            n.id: (replace(n, cache_bytes=math.inf) if n.role == PRODUCER else n)
            for n in sorted(nodes, key=lambda n: n.id)
        }
        if not self.producers:
            raise MissingProducer("topology has no producer")
        if not self.edges:
            raise TopologyError("topology has no edge router")

        pairs = set()
        for ln in links:
            if ln.a == ln.b:
                raise TopologyError(f"self-loop on node {ln.a}")
            if ln.a not in self.nodes or ln.b not in self.nodes:
                raise TopologyError(f"link {ln.a}-{ln.b} references an unknown node")
            if not ln.bandwidth > 0:
                raise TopologyError(f"link {ln.a}-{ln.b}: bandwidth must be > 0")
            if ln.delay < 0:
                raise TopologyError(f"link {ln.a}-{ln.b}: negative delay")
            key = (min(ln.a, ln.b), max(ln.a, ln.b))
            if key in pairs:
                raise TopologyError(f"duplicate link {key}")
            pairs.add(key)
        self.links: tuple[Link, ...] = links
        self._link_index = {}
        self._adj: dict[int, list[tuple[int, float]]] = {i: [] for i in self.nodes}
        for idx, ln in enumerate(links):
            self._link_index[(ln.a, ln.b)] = idx
            self._link_index[(ln.b, ln.a)] = idx
            self._adj[ln.a].append((ln.b, ln.delay))
            self._adj[ln.b].append((ln.a, ln.delay))
        for nbrs in self._adj.values():
            nbrs.sort()

        cids = set()
        for c in consumers:
            if c.id in cids:
                raise DuplicateNode(f"consumer {c.id} declared twice")
            cids.add(c.id)
            if self.nodes.get(c.edge) is None or self.nodes[c.edge].role != EDGE:
                raise TopologyError(f"consumer {c.id} must attach to an edge router")
            if not c.bandwidth > 0 or c.delay < 0:
                raise TopologyError(f"consumer {c.id}: invalid access link")
        self.consumers: dict[int, Consumer] = {c.id: c for c in sorted(consumers, key=lambda c: c.id)}

        if not nx.is_connected(self.graph):
            raise DisconnectedGraph("topology graph is not connected")
        self._paths: dict[tuple[int, int], Path] = {}

    # -- views ---------------------------------------------------------------
    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for ln in self.links:
            g.add_edge(ln.a, ln.b, bandwidth=ln.bandwidth, delay=ln.delay)
        return g

    def _role(self, role):
        return tuple(i for i, n in self.nodes.items() if n.role == role)

    @property
    def producers(self) -> tuple[int, ...]:
        return self._role(PRODUCER)

    @property
    def edges(self) -> tuple[int, ...]:
        return self._role(EDGE)

    @property
    def routers(self) -> tuple[int, ...]:
        """All non-producer nodes, i.e. the nodes with a finite content store."""
        return tuple(i for i, n in self.nodes.items() if n.role != PRODUCER)

    def capacity(self, node: int) -> float:
        return self.nodes[node].cache_bytes

    def link_index(self, a: int, b: int) -> int:
        return self._link_index[(a, b)]

    def link(self, a: int, b: int) -> Link:
        return self.links[self._link_index[(a, b)]]

    def consumers_of(self, edge: int) -> tuple[int, ...]:
        return tuple(c.id for c in self.consumers.values() if c.edge == edge)

    def path(self, d: int, p: int) -> Path:
        key = (d, p)
        if key not in self._paths:
            self._paths[key] = shortest_delay_path(self, d, p)
        return self._paths[key]

    def with_cache(self, cache_bytes: float | Mapping[int, float]) -> "Topology":
        """Copy with router stores resized (uniform value or per-node mapping)."""
        def size(n):
            if n.role == PRODUCER:
                return n.cache_bytes
            if isinstance(cache_bytes, Mapping):
                return cache_bytes.get(n.id, n.cache_bytes)
            return cache_bytes
        nodes = [replace(n, cache_bytes=size(n)) for n in self.nodes.values()]
        return Topology(nodes, self.links, self.consumers.values())

    def __repr__(self):
        return (f"Topology(nodes={len(self.nodes)}, links={len(self.links)}, "
                f"producers={len(self.producers)}, edges={len(self.edges)}, "
                f"consumers={len(self.consumers)})")


def build_topology(spec: Mapping) -> Topology:
    """Build a validated topology from a plain description.

    ``spec`` holds ``nodes`` as ``(id, role, cache_bytes)`` tuples, ``links``
    as ``(a, b, bandwidth_bps, delay_s)`` tuples and optionally ``consumers``
    as ``(id, edge)`` or ``(id, edge, bandwidth_bps, delay_s)`` tuples.
    """
    nodes = [Node(int(i), str(role), float(cache)) for i, role, cache in spec["nodes"]]
    links = [Link(int(a), int(b), float(bw), float(dl)) for a, b, bw, dl in spec.get("links", ())]
    consumers = []
    for c in spec.get("consumers", ()):
        consumers.append(Consumer(int(c[0]), int(c[1]), *map(float, c[2:])))
    return Topology(nodes, links, consumers)


def shortest_delay_path(t: Topology, d: int, p: int) -> Path:
    """Least total propagation-delay path from edge ``d`` to producer ``p``.

    Equal-delay candidates are resolved by the lexicographically smallest
    node sequence.  Delays are compared after rounding to 1e-12 s so that
    summation order cannot break a tie.
    """
    if d not in t.nodes or t.nodes[d].role != EDGE:
        raise NoPath(f"{d} is not an edge router")
    if p not in t.nodes or t.nodes[p].role != PRODUCER:
        raise NoPath(f"{p} is not a producer")
    heap = [(0.0, (d,))]
    done = set()
    while heap:
        dist, seq = heapq.heappop(heap)
        node = seq[-1]
        if node in done:
            continue
        done.add(node)
        if node == p:
            return Path(seq, dist)
        for nbr, delay in t._adj[node]:
            # producers are sinks: never forward through another producer
            if nbr in done or (t.nodes[nbr].role == PRODUCER and nbr != p):
                continue
            heapq.heappush(heap, (round(dist + delay, 12), seq + (nbr,)))
    raise NoPath(f"no path from {d} to {p}")


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def desk_topology(cache_bytes: float = 0.0, n_consumers: int = 32,
                  bandwidth: float = DEFAULT_BANDWIDTH,
                  delay: float = DEFAULT_DELAY) -> Topology:
    """The 16-node desk-scale tree: one producer, four edge routers.

    Consumer-to-producer distances are 7, 7, 6 and 4 hops (access link
    included), so the farthest consumers sit 7 hops from the producer.
    """
    parent = {1: 0, 2: 1, 3: 1, 4: 2, 5: 2, 6: 3, 7: 4, 8: 5, 9: 6,
              10: 7, 11: 8, 12: 9, 13: 10, 14: 11, 15: 3}
    edges = (13, 14, 12, 15)
    nodes = [Node(0, PRODUCER)]
    for i in range(1, 16):
        nodes.append(Node(i, EDGE if i in edges else INTERMEDIATE, cache_bytes))
    links = [Link(c, p, bandwidth, delay) for c, p in sorted(parent.items())]
    consumers = [Consumer(j, edges[j % len(edges)], bandwidth, delay)
                 for j in range(n_consumers)]
    return Topology(nodes, links, consumers)


def ba_skeleton(n_as: int, seed: int, m: int = 2) -> nx.Graph:
    """AS-level preferential-attachment graph."""
    if n_as < 2:
        raise InvalidParam("n_as must be >= 2")
    return nx.barabasi_albert_graph(n_as, min(m, n_as - 1), seed=seed)


def generate_ba_topology(n_as: int, intra_links: int = 1, seed: int = 0, *,
                         n_nodes: int | None = None, n_producers: int = 3,
                         n_consumers: int = 84, n_edges: int | None = None,
                         m: int = 2, bandwidth: float = DEFAULT_BANDWIDTH,
                         intra_delay: float = DEFAULT_DELAY,
                         inter_delay: float = 0.010) -> Topology:
    """Two-level random topology: BA skeleton over ASes, random routers inside.

    Each AS gets ``n_nodes // n_as`` routers (the remainder goes to the first
    ASes), wired as a random spanning tree plus ``intra_links`` random chords.
    Every skeleton edge becomes one link between random routers of the two
    ASes.  Producers are placed in distinct ASes; edge routers are the
    lowest-degree remaining nodes.
    """
    if n_as < 2:
        raise InvalidParam("n_as must be >= 2")
    if n_nodes is None:
        n_nodes = 7 * n_as
    if n_nodes < n_as:
        raise InvalidParam("need at least one router per AS")
    if intra_links < 0 or n_producers < 1 or n_consumers < 0:
        raise InvalidParam("negative count")
    n_producers = min(n_producers, n_as)
    if n_edges is None:
        n_edges = max(1, n_nodes // 3)
    if n_producers + n_edges > n_nodes:
        raise InvalidParam("too many producers/edges for the node count")

    rng = np.random.default_rng(seed)
    skeleton = ba_skeleton(n_as, seed, m)
    base, extra = divmod(n_nodes, n_as)
    members: list[list[int]] = []
    nxt = 0
    for a in range(n_as):
        cnt = base + (1 if a < extra else 0)
        members.append(list(range(nxt, nxt + cnt)))
        nxt += cnt

    pairs: set[tuple[int, int]] = set()

    def add(u, v):
        if u != v:
            pairs.add((min(u, v), max(u, v)))

    for group in members:
        for idx in range(1, len(group)):
            add(group[idx], group[int(rng.integers(idx))])
        possible = len(group) * (len(group) - 1) // 2
        for _ in range(intra_links):
            if sum(1 for u, v in pairs if u in group and v in group) >= possible:
                break
            while True:
                u, v = rng.choice(group, size=2, replace=False)
                key = (min(u, v), max(u, v))
                if key not in pairs:
                    pairs.add((int(key[0]), int(key[1])))
                    break
    inter = set()
    for a, b in sorted(skeleton.edges()):
        u = int(rng.choice(members[a]))
        v = int(rng.choice(members[b]))
        add(u, v)
        inter.add((min(u, v), max(u, v)))

    degree = {i: 0 for i in range(n_nodes)}
    for u, v in pairs:
        degree[u] += 1
        degree[v] += 1
    g = nx.Graph(list(pairs))
    g.add_nodes_from(range(n_nodes))
    cut = set(nx.articulation_points(g))
    prod_as = sorted(rng.choice(n_as, size=n_producers, replace=False).tolist())
    producers = set()
    for a in prod_as:
        # producers must not be transit nodes, so skip articulation points
        pool = [i for i in members[a] if i not in cut] or members[a]
        producers.add(min(pool, key=lambda i: (degree[i], i)))
    tiebreak = rng.permutation(n_nodes)
    candidates = sorted((i for i in range(n_nodes) if i not in producers),
                        key=lambda i: (degree[i], tiebreak[i]))
    edge_set = set(candidates[:n_edges])

    nodes = []
    for i in range(n_nodes):
        role = PRODUCER if i in producers else EDGE if i in edge_set else INTERMEDIATE
        nodes.append(Node(i, role, 0.0))
    links = [Link(u, v, bandwidth, inter_delay if (u, v) in inter else intra_delay)
             for u, v in sorted(pairs)]
    edge_list = sorted(edge_set)
    consumers = [Consumer(j, edge_list[j % len(edge_list)], bandwidth, intra_delay)
                 for j in range(n_consumers)]
    topo = Topology(nodes, links, consumers)
    # producers are forwarding sinks, so every edge must still reach each one
    for d in topo.edges:
        for p in topo.producers:
            topo.path(d, p)
    return topo
