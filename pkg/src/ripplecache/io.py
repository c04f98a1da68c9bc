"""Readers and writers for topology files and placement CSVs.

Topology files are line oriented; ``#`` starts a comment::

    node <id> <producer|edge|intermediate> [cache_bytes]
    link <a> <b> <bandwidth_bps> <delay_s>
    consumer <id> <edge_id> [bandwidth_bps delay_s]

Placement files are CSV with header ``router_id,f,k,b``, one cached
segment per row.
"""
from __future__ import annotations

import csv
import math
from typing import Iterable

from .catalog import SegmentId
from .errors import ConfigError, TopologyError
from .topology import PRODUCER, Consumer, Link, Node, Topology

PLACEMENT_HEADER = ["router_id", "f", "k", "b"]


def format_topology(t: Topology) -> str:
    lines = [f"# {len(t.nodes)} nodes, {len(t.links)} links, {len(t.consumers)} consumers"]
    for n in t.nodes.values():
        cache = "" if n.role == PRODUCER or math.isinf(n.cache_bytes) else f" {n.cache_bytes!r}"
        lines.append(f"node {n.id} {n.role}{cache}")
    for ln in t.links:
        lines.append(f"link {ln.a} {ln.b} {ln.bandwidth!r} {ln.delay!r}")
    for c in t.consumers.values():
        lines.append(f"consumer {c.id} {c.edge} {c.bandwidth!r} {c.delay!r}")
    return "\n".join(lines) + "\n"


def parse_topology(text: str) -> Topology:
    nodes, links, consumers = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *args = line.split()
        try:
            if kind == "node" and len(args) in (2, 3):
                cache = float(args[2]) if len(args) == 3 else 0.0
                nodes.append(Node(int(args[0]), args[1], cache))
            elif kind == "link" and len(args) == 4:
                links.append(Link(int(args[0]), int(args[1]), float(args[2]), float(args[3])))
            elif kind == "consumer" and len(args) in (2, 4):
                consumers.append(Consumer(int(args[0]), int(args[1]), *map(float, args[2:])))
            else:
                raise TopologyError(f"line {lineno}: cannot parse {raw.strip()!r}")
        except ValueError as e:
            raise TopologyError(f"line {lineno}: {e}") from e
    return Topology(nodes, links, consumers)


def read_topology(path: str) -> Topology:
    try:
        with open(path) as fh:
            return parse_topology(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read topology {path}: {e}") from e


def write_topology(t: Topology, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(format_topology(t))


def write_placement(x: dict, fh) -> int:
    w = csv.writer(fh)
    w.writerow(PLACEMENT_HEADER)
    n = 0
    for v in sorted(x):
        for s in sorted(x[v]):
            w.writerow([v, s.f, s.k, s.b])
            n += 1
    return n


def read_placement(fh) -> dict:
    rows = csv.reader(fh)
    header = next(rows, None)
    if header != PLACEMENT_HEADER:
        raise ConfigError(f"placement header must be {','.join(PLACEMENT_HEADER)}")
    x: dict = {}
    for row in rows:
        if not row:
            continue
        try:
            v, f, k, b = (int(c) for c in row)
        except ValueError as e:
            raise ConfigError(f"bad placement row {row}") from e
        x.setdefault(v, set()).add(SegmentId(f, k, b))
    return {v: frozenset(s) for v, s in x.items()}


def placement_rows(x: dict) -> Iterable[tuple]:
    for v in sorted(x):
        for s in sorted(x[v]):
            yield (v, s.f, s.k, s.b)
