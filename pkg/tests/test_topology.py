import math

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from ripplecache.errors import DisconnectedGraph, DuplicateNode, InvalidParam, MissingProducer, NoPath
from ripplecache.topology import (build_topology, desk_topology, generate_ba_topology,
                                  shortest_delay_path)


def test_minimal_two_node_graph():
    t = build_topology({"nodes": [(1, "edge", 0), (0, "producer", 0)],
                        "links": [(1, 0, 20e6, 0.002)]})
    p = t.path(1, 0)
    assert p.nodes == (1, 0) and p.L == 2
    assert math.isinf(t.capacity(0))


def test_line_path(line3):
    p = line3.path(1, 0)
    assert p.nodes == (1, 2, 0)
    assert p.L == 3
    assert p.delay == pytest.approx(0.002)
    assert p.hop(2) == 2 and p.hop_of(0) == 3 and p.routers == (1, 2)


def test_prefers_lower_delay():
    t = build_topology({
        "nodes": [(1, "edge", 0), (2, "intermediate", 0), (3, "intermediate", 0), (0, "producer", 0)],
        "links": [(1, 2, 1e6, 0.0015), (2, 0, 1e6, 0.0015), (1, 3, 1e6, 0.001), (3, 0, 1e6, 0.001)],
    })
    assert t.path(1, 0).nodes == (1, 3, 0)


def test_equal_delay_tie_is_lexicographic():
    t = build_topology({
        "nodes": [(1, "edge", 0), (5, "intermediate", 0), (3, "intermediate", 0), (0, "producer", 0)],
        "links": [(1, 5, 1e6, 0.001), (5, 0, 1e6, 0.002), (1, 3, 1e6, 0.002), (3, 0, 1e6, 0.001)],
    })
    # both routes take 3 ms; (1, 3, 0) < (1, 5, 0)
    assert shortest_delay_path(t, 1, 0).nodes == (1, 3, 0)


def test_paths_never_transit_another_producer():
    t = build_topology({
        "nodes": [(1, "edge", 0), (8, "producer", 0), (9, "producer", 0), (2, "intermediate", 0)],
        "links": [(1, 8, 1e6, 0.001), (8, 9, 1e6, 0.001), (1, 2, 1e6, 0.01), (2, 9, 1e6, 0.01)],
    })
    assert t.path(1, 9).nodes == (1, 2, 9)


def test_desk_topology_depth():
    t = desk_topology(1e6)
    assert len(t.nodes) == 16 and len(t.producers) == 1
    # L nodes on the router path means L links counting the access link
    hops = sorted(t.path(d, 0).L for d in t.edges)
    assert hops == [4, 6, 7, 7]
    assert all(t.capacity(v) == 1e6 for v in t.routers)


@pytest.mark.parametrize("spec, exc", [
    ({"nodes": [(1, "edge", 0), (0, "producer", 0), (2, "intermediate", 0)],
      "links": [(1, 2, 1e6, 0.001)]}, DisconnectedGraph),
    ({"nodes": [(1, "edge", 0), (1, "producer", 0)], "links": []}, DuplicateNode),
    ({"nodes": [(1, "edge", 0), (2, "intermediate", 0)], "links": [(1, 2, 1e6, 0.001)]},
     MissingProducer),
])
def test_invalid_topologies(spec, exc):
    with pytest.raises(exc):
        build_topology(spec)


def test_path_needs_edge_and_producer(line3):
    with pytest.raises(NoPath):
        line3.path(2, 0)
    with pytest.raises(NoPath):
        line3.path(1, 2)


def test_ba_42_nodes_connected_and_deterministic():
    a = generate_ba_topology(6, 1, 7, n_nodes=42)
    b = generate_ba_topology(6, 1, 7, n_nodes=42)
    assert len(a.nodes) == 42
    assert a.links == b.links
    assert nx.is_connected(a.graph)


def test_ba_rejects_single_as():
    with pytest.raises(InvalidParam):
        generate_ba_topology(1, 1, 0)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(6, 16), seed=st.integers(0, 10_000))
def test_ba_paths_are_simple_and_end_at_producer(n, seed):
    n_as = max(2, n // 5)
    try:
        t = generate_ba_topology(n_as, 1, seed, n_nodes=n, n_producers=2, n_consumers=4)
    except (NoPath, InvalidParam):
        return
    for d in t.edges:
        for p in t.producers:
            path = t.path(d, p)
            assert path.edge == d and path.producer == p
            assert len(set(path.nodes)) == path.L
            assert all(t.nodes[v].role != "producer" for v in path.routers)
