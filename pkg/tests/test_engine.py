import pytest

from ripplecache.baselines import CE2
from ripplecache.catalog import Catalog, SegmentId, Session, SessionSchedule, sample_sessions
from ripplecache.errors import ConfigError
from ripplecache.simcore import NoCache, PeriodicPlacement, SimConfig, StaticPlacement, run_simulation
from ripplecache.topology import build_topology, desk_topology


@pytest.fixture
def two_consumers():
    return build_topology({
        "nodes": [(1, "edge", 50e6), (2, "intermediate", 50e6), (0, "producer", 0)],
        "links": [(1, 2, 20e6, 0.002), (2, 0, 20e6, 0.002)],
        "consumers": [(10, 1), (11, 1)],
    })


def test_empty_schedule(two_consumers):
    out = run_simulation(two_consumers, Catalog(1, 3), NoCache(), SessionSchedule())
    assert out.sessions == [] and out.requests == 0 and out.deliveries == []


def test_cold_start_all_from_producer(two_consumers):
    cat = Catalog(1, 5)
    out = run_simulation(two_consumers, cat, CE2("lru"), SessionSchedule((Session(10, 0.0, 1),)))
    tr = out.sessions[0]
    assert len(tr.bitrates) == 5 and not tr.aborted
    assert set(tr.hit_hops) == {3}


def test_second_consumer_hits_at_edge(two_consumers):
    cat = Catalog(1, 5)
    sched = SessionSchedule((Session(10, 0.0, 1), Session(11, 100.0, 1)))
    out = run_simulation(two_consumers, cat, CE2("lfu"), sched)
    first, second = out.sessions
    served = {(k + 1, b) for k, b in enumerate(first.bitrates)}
    for k, (b, hop) in enumerate(zip(second.bitrates, second.hit_hops), start=1):
        assert hop == (1 if (k, b) in served else 3)
    assert any(h == 1 for h in second.hit_hops)


def test_static_placement_serves_from_store(two_consumers):
    cat = Catalog(1, 3)
    x = {2: [SegmentId(1, k, 1) for k in (1, 2, 3)]}
    pol = StaticPlacement(x, lambda s: cat.segment_size(s.b))
    out = run_simulation(two_consumers, cat, pol, SessionSchedule((Session(10, 0.0, 1),)))
    assert out.sessions[0].hit_hops[0] == 2
    assert out.stores[2] == x[2]


def test_unknown_consumer_rejected(two_consumers):
    with pytest.raises(ConfigError):
        run_simulation(two_consumers, Catalog(1, 3), NoCache(), SessionSchedule((Session(99, 0.0, 1),)))


def _desk_run(policy, seed=3):
    cat = Catalog(6, 8)
    topo = desk_topology(cat.total_bytes / 16 * 0.2, n_consumers=12)
    sched = sample_sessions(cat, sorted(topo.consumers), 120, 600, seed)
    return run_simulation(topo, cat, policy, sched, SimConfig(seed=seed, check_invariants=True))


@pytest.mark.parametrize("make", [NoCache, lambda: CE2("lru"), lambda: CE2("lfu")])
def test_conservation_and_determinism(make):
    a, b = _desk_run(make()), _desk_run(make())
    assert a.requests == a.completed + a.aborted
    assert sum(len(tr.bitrates) for tr in a.sessions) == a.completed
    assert a.to_csv() == b.to_csv()
    assert a.stats.to_plain() == b.stats.to_plain()


def test_theta_counts_every_request():
    out = _desk_run(NoCache())
    assert sum(n for v in out.stats.theta.values() for n in v.values()) == out.requests


def test_stop_time_aborts_unfinished(two_consumers):
    cat = Catalog(1, 50)
    out = run_simulation(two_consumers, cat, NoCache(), SessionSchedule((Session(10, 0.0, 1),)),
                         SimConfig(stop_time=5.0))
    assert out.aborted == 1 and out.sessions[0].aborted
    assert out.requests == out.completed + out.aborted


def test_periodic_replan_rebuilds_stores(two_consumers):
    cat = Catalog(1, 30)
    calls = []

    def planner(stats):
        calls.append(sum(stats.theta[1].values()))
        return {1: [SegmentId(1, k, 1) for k in range(1, 31)]}

    pol = PeriodicPlacement({}, lambda s: cat.segment_size(s.b), planner, 20.0)
    out = run_simulation(two_consumers, cat, pol, SessionSchedule((Session(10, 0.0, 1), Session(11, 30.0, 1))))
    assert out.replans >= 1 and calls == sorted(calls)
    late = out.sessions[1]
    assert any(h == 1 for h, b in zip(late.hit_hops, late.bitrates) if b == 1)
