import numpy as np
import pytest
from hypothesis import given, strategies as st

from ripplecache.catalog import Catalog, SegmentId, sample_sessions, zipf_weights
from ripplecache.errors import InvalidParam


def test_segment_sizes():
    c = Catalog(1, 1, ladder=(1e6, 8e6), segment_duration=4.0)
    assert c.segment_size(1) == 500_000
    assert c.segment_size(2) == 4_000_000
    assert Catalog(1, 1, segment_duration=0.0).segment_size(1) == 0


def test_mu_ratios(ladder_cat):
    assert ladder_cat.mu(1) == 1
    assert ladder_cat.mu_table == (1.0, 2.5, 5.0, 8.0)
    assert Catalog(1, 1, ladder=(3e6,)).mu_table == (1.0,)


def test_rank_bounds(ladder_cat):
    with pytest.raises(InvalidParam):
        ladder_cat.segment_size(5)
    with pytest.raises(InvalidParam):
        Catalog(1, 1, ladder=(2e6, 1e6))


def test_zipf_examples():
    np.testing.assert_allclose(zipf_weights(4, 1.0), [0.48, 0.24, 0.16, 0.12], atol=1e-12)
    np.testing.assert_allclose(zipf_weights(5, 0.0), [0.2] * 5)
    assert zipf_weights(1, 1.2).tolist() == [1.0]


@given(F=st.integers(1, 200), alpha=st.floats(0, 3))
def test_zipf_normalised_and_monotone(F, alpha):
    w = zipf_weights(F, alpha)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(np.diff(w) <= 1e-15)


def test_total_bytes(ladder_cat):
    # 4 files x 3 segments x (0.5 + 1.25 + 2.5 + 4) MB
    assert ladder_cat.total_bytes == pytest.approx(12 * 8.25e6)


def test_segment_name():
    assert SegmentId(25, 3, 2).name() == "/Video25/3/B2"


def test_sessions_empty_and_deterministic(ladder_cat):
    assert len(sample_sessions(ladder_cat, [1, 2], 300, 0, seed=1)) == 0
    a = sample_sessions(ladder_cat, [1, 2, 3], 300, 3000, seed=5)
    b = sample_sessions(ladder_cat, [1, 2, 3], 300, 3000, seed=5)
    assert a == b
    assert all(0 <= s.start < 3000 and 1 <= s.file <= 4 for s in a)
    assert [s.start for s in a] == sorted(s.start for s in a)


def test_session_count_matches_poisson_rate(ladder_cat):
    counts = [len(sample_sessions(ladder_cat, range(32), 300, 3000, seed=s)) for s in range(30)]
    assert abs(np.mean(counts) - 320) <= 0.2 * 320
    assert all(abs(c - 320) <= 0.2 * 320 for c in counts)
