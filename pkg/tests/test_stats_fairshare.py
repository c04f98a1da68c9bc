import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ripplecache import kernels
from ripplecache.simcore.fairshare import fair_share_rates, incidence_matrix
from ripplecache.simcore.stats import StatsLedger


def test_mean_delay():
    s = StatsLedger()
    s.record_delivery(1, 2, 2, 3.0)
    s.record_delivery(1, 2, 2, 4.0)
    assert s.mean_delay(1, 2, 2) == pytest.approx(3.5)
    assert s.mean_delay(1, 3, 2) is None
    s.record_delivery(1, 2, 3, 6.5)
    assert s.mean_delay(1, 2, 3) == 6.5
    assert s.mean_delay(1, 2, 3, min_samples=2) is None


def test_theta_counts():
    s = StatsLedger()
    s.count_request(5, "a")
    s.count_request(5, "a", 2)
    assert s.theta_of(5) == {"a": 3}
    assert s.theta_of(6) == {}


def test_fair_share_examples():
    assert fair_share_rates([[0]], [20e6]).tolist() == [20e6]
    assert fair_share_rates([[0], [0]], [20e6]).tolist() == [10e6, 10e6]
    # flow 0 is held to 4 Mbps by link 1; the other two split what is left
    rates = fair_share_rates([[0, 1], [0], [0]], [20e6, 4e6])
    np.testing.assert_allclose(rates, [4e6, 8e6, 8e6])


def test_no_flows():
    assert fair_share_rates([], [1.0]).shape == (0,)


flows = st.integers(1, 6).flatmap(lambda n_links: st.tuples(
    st.just(n_links),
    st.lists(st.lists(st.integers(0, n_links - 1), min_size=1, max_size=n_links, unique=True),
             min_size=1, max_size=10),
    st.lists(st.floats(1.0, 100.0), min_size=n_links, max_size=n_links)))


@settings(max_examples=80, deadline=None)
@given(data=flows)
def test_maxmin_feasible_and_bottlenecked(data):
    n_links, fl, cap = data
    inc = incidence_matrix(fl, n_links)
    rates = kernels.maxmin_rates_numpy(inc, np.array(cap))
    load = inc.T.astype(float) @ rates
    assert np.all(load <= np.array(cap) * (1 + 1e-9))
    # every flow crosses a saturated link where it has the largest rate
    for f in range(len(fl)):
        assert any(load[l] >= cap[l] * (1 - 1e-9) and rates[f] >= rates[inc[:, l]].max() * (1 - 1e-9)
                   for l in fl[f])


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
@settings(max_examples=60, deadline=None)
@given(data=flows)
def test_numba_kernel_matches_numpy(data):
    n_links, fl, cap = data
    inc = incidence_matrix(fl, n_links)
    c = np.array(cap)
    np.testing.assert_allclose(kernels.maxmin_rates_numba(inc, c),
                               kernels.maxmin_rates_numpy(inc, c), rtol=1e-12)


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
@given(rows=st.lists(st.lists(st.booleans(), min_size=4, max_size=4), min_size=1, max_size=12))
def test_first_hits_backends_agree(rows):
    m = np.array(rows, dtype=bool)
    np.testing.assert_array_equal(kernels.first_hits_numba(m), kernels.first_hits_numpy(m))


def test_first_hits_prefix_position():
    m = np.array([[0, 1, 0, 1], [0, 0, 0, 0], [1, 0, 0, 0]], dtype=bool)
    assert kernels.first_hits_numpy(m).tolist() == [2, 4, 1]


def test_backend_flag():
    assert kernels._flag_enabled(None)
    assert not kernels._flag_enabled("0")
    assert not kernels._flag_enabled("off")
    assert kernels.backend() in ("numba", "numpy")
