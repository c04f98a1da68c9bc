import pytest
from hypothesis import example, given, strategies as st

from ripplecache.catalog import Catalog
from ripplecache.errors import InvalidParam, MissingStats
from ripplecache.reward import (beta, estimate_path_delays, gamma, ripple_bitrate,
                                ripple_bitrate_table)
from ripplecache.simcore.stats import StatsLedger
from ripplecache.topology import build_topology

MU = (1.0, 2.5, 5.0, 8.0)

# mean delays (s) of 4 s segments seen from four successive routers
DELAY_TABLE = {3: (3.0, 6.5, 10.5, 16.5), 2: (1.0, 3.5, 6.5, 11.0), 1: (0.5, 1.0, 2.0, 3.0)}


def _ledger(table, samples=1, edge=1):
    s = StatsLedger()
    for b, row in table.items():
        for hop, d in enumerate(row, start=1):
            for _ in range(samples):
                s.record_delivery(edge, hop, b, d)
    return s


@pytest.mark.parametrize("rank, eta, want", [(1, 1, 0.5), (1, 0, 1.0), (4, 1, 0.2)])
def test_beta(rank, eta, want):
    assert abs(beta(rank, eta) - want) <= 1e-12


def test_beta_domain():
    with pytest.raises(InvalidParam):
        beta(0, 1)
    with pytest.raises(InvalidParam):
        beta(1, -1)


def test_gamma_four_cases():
    assert abs(gamma(2, 2, MU, 1.0) - 2.5) <= 1e-12            # b == RB
    assert abs(gamma(3, 1, MU, 1.0) - 1.75) <= 1e-12           # b < RB
    assert abs(gamma(1, 3, MU, 1.0) - 1.0) <= 1e-12            # b > RB
    assert abs(gamma(None, 3, MU, 1.0) - 1.0) <= 1e-12         # RB absent


def test_ripple_bitrate_delay_table():
    s = _ledger(DELAY_TABLE)
    got = [ripple_bitrate(s, 1, hop, 4.0, 3, min_samples=1) for hop in (1, 2, 3, 4)]
    assert got == [3, 2, 1, 1]


def test_ripple_bitrate_examples():
    s = _ledger({3: (6.5,), 2: (3.5,), 1: (1.0,)})
    assert ripple_bitrate(s, 1, 1, 4.0, 3, min_samples=1) == 2
    s = _ledger({3: (16.5,), 2: (11.0,), 1: (3.0,)})
    assert ripple_bitrate(s, 1, 1, 4.0, 3, min_samples=1) == 1
    s = _ledger({3: (16.5,), 2: (11.0,), 1: (5.0,)})
    assert ripple_bitrate(s, 1, 1, 4.0, 3, min_samples=1) is None


def test_ripple_bitrate_needs_samples():
    s = _ledger(DELAY_TABLE, samples=2)
    with pytest.raises(MissingStats):
        ripple_bitrate(s, 1, 1, 4.0, 3, min_samples=3)
    assert ripple_bitrate(s, 1, 1, 4.0, 3, min_samples=2) == 3


@given(rb=st.integers(1, 4), b=st.integers(1, 4), eta=st.floats(0, 50))
@example(rb=2, b=1, eta=1.8100681290083857e-126)
def test_gamma_bounds(rb, b, eta):
    g = gamma(rb, b, MU, eta)
    if b < rb:
        beta = 1.0 / (eta + b)
        # beta == 1 only at b=1 with eta == 0, or eta so small that 1 + eta rounds to 1
        assert MU[b - 1] < g < MU[b] or (beta == 1.0 and g == MU[1])
    elif b == rb:
        assert g == MU[b - 1]
    else:
        assert g == MU[rb - 1]


def test_gamma_approaches_base_for_large_eta():
    assert gamma(4, 2, MU, 1e9) == pytest.approx(MU[1], rel=1e-8)


@given(b=st.integers(1, 3), eta=st.floats(0, 20), d=st.floats(1e-3, 10))
def test_gamma_non_increasing_in_eta(b, eta, d):
    assert gamma(4, b, MU, eta + d) <= gamma(4, b, MU, eta) + 1e-12


def _line4():
    return build_topology({
        "nodes": [(1, "edge", 0), (2, "intermediate", 0), (3, "intermediate", 0),
                  (4, "intermediate", 0), (0, "producer", 0)],
        "links": [(1, 2, 20e6, 0.002), (2, 3, 20e6, 0.002), (3, 4, 20e6, 0.002), (4, 0, 20e6, 0.002)],
        "consumers": [(9, 1)],
    })


def test_table_uses_measured_cells():
    topo = _line4()
    cat = Catalog(1, 1, ladder=(1e6, 2.5e6, 5e6))
    table = {b: row + (row[-1] + 4.0,) for b, row in DELAY_TABLE.items()}
    rb = ripple_bitrate_table(_ledger(table, samples=3), topo, cat)
    assert rb.rb[(1, 0)] == [3, 2, 1, 1, None]
    assert not any(rb.estimated[(1, 0)])


def test_unobserved_hops_are_interpolated():
    topo = _line4()
    cat = Catalog(1, 1, ladder=(1e6, 2.5e6))
    s = StatsLedger()
    for _ in range(3):
        s.record_delivery(1, 5, 1, 6.0)
        s.record_delivery(1, 5, 2, 15.0)
    delays, flags = estimate_path_delays(s, topo, cat, 1, 0)
    assert flags[4] == [False, False] and all(all(f) for f in flags[:4])
    # hop 1 is an uncontended edge delivery over the access link
    edge1 = 2 * 0.002 + cat.segment_size(1) * 8 / 20e6
    assert delays[0][0] == pytest.approx(edge1)
    assert delays[2][0] == pytest.approx(edge1 + (6.0 - edge1) * 0.5)
    assert delays[1][1] < delays[2][1] < delays[3][1] < 15.0


def test_unobserved_path_is_absent():
    topo = _line4()
    cat = Catalog(1, 1)
    rb = ripple_bitrate_table(StatsLedger(), topo, cat)
    assert rb.rb[(1, 0)] == [None] * 5
