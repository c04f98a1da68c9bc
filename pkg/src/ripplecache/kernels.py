"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports cleanly and the environment
variable ``RIPPLECACHE_NUMBA`` is not set to a false value (``0``, ``false``,
``no``, ``off``).  Both implementations are always importable under their
explicit names so tests and benchmarks can compare them directly.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

HAVE_NUMBA = numba is not None


def _flag_enabled(value: str | None) -> bool:
    if value is None:
        return True
    return value.strip().lower() not in ("0", "false", "no", "off", "")


USE_NUMBA = HAVE_NUMBA and _flag_enabled(os.environ.get("RIPPLECACHE_NUMBA"))


# --------------------------------------------------------------------------
# max-min fair allocation (progressive filling)
# --------------------------------------------------------------------------

def maxmin_rates_numpy(incidence: np.ndarray, capacity: np.ndarray) -> np.ndarray:
    """Max-min fair rates by progressive filling.

    Parameters
    ----------
    incidence : (n_flows, n_links) bool array
        ``incidence[f, l]`` is True when flow ``f`` traverses link ``l``.
    capacity : (n_links,) float array
        Link capacities in bits/second.

    Returns
    -------
    rates : (n_flows,) float array
        Flows that traverse no link get ``inf``.
    """
    inc = np.asarray(incidence, dtype=bool)
    n_flows = inc.shape[0]
    rates = np.full(n_flows, np.inf)
    if n_flows == 0:
        return rates
    remaining = np.asarray(capacity, dtype=np.float64).copy()
    unfrozen = inc.any(axis=1)
    while unfrozen.any():
        counts = inc[unfrozen].sum(axis=0)
        share = np.full(remaining.shape, np.inf)
        used = counts > 0
        share[used] = np.maximum(remaining[used], 0.0) / counts[used]
        link = int(np.argmin(share))
        level = share[link]
        sel = unfrozen & inc[:, link]
        rates[sel] = level
        remaining -= level * inc[sel].sum(axis=0)
        unfrozen &= ~sel
    return rates


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def maxmin_rates_numba(incidence, capacity):  # pragma: no cover - compiled
        n_flows, n_links = incidence.shape
        rates = np.full(n_flows, np.inf)
        remaining = capacity.astype(np.float64).copy()
        unfrozen = np.zeros(n_flows, dtype=np.bool_)
        counts = np.zeros(n_links, dtype=np.int64)
        left = 0
        for f in range(n_flows):
            for l in range(n_links):
                if incidence[f, l]:
                    unfrozen[f] = True
                    counts[l] += 1
            if unfrozen[f]:
                left += 1
        while left > 0:
            best = np.inf
            link = -1
            for l in range(n_links):
                if counts[l] > 0:
                    r = remaining[l]
                    if r < 0.0:
                        r = 0.0
                    s = r / counts[l]
                    if s < best:
                        best = s
                        link = l
            if link < 0:
                break
            for f in range(n_flows):
                if unfrozen[f] and incidence[f, link]:
                    rates[f] = best
                    unfrozen[f] = False
                    left -= 1
                    for l in range(n_links):
                        if incidence[f, l]:
                            remaining[l] -= best
                            counts[l] -= 1
        return rates

    @numba.njit(cache=True)
    def first_hits_numba(mask):  # pragma: no cover - compiled
        n, L = mask.shape
        out = np.full(n, L, dtype=np.int64)
        for r in range(n):
            for i in range(L):
                if mask[r, i]:
                    out[r] = i + 1
                    break
        return out

else:  # pragma: no cover
    maxmin_rates_numba = None
    first_hits_numba = None


# --------------------------------------------------------------------------
# first on-path hit (prefix-OR position)
# --------------------------------------------------------------------------

def first_hits_numpy(mask: np.ndarray) -> np.ndarray:
    """1-based index of the first True in each row; ``L`` when a row is empty.

    Row ``r`` of ``mask`` is the per-hop holding indicator of one demand, so
    the result is the hop where the segment first appears along the path
    (the producer hop ``L`` when nothing upstream holds it).
    """
    mask = np.asarray(mask, dtype=bool)
    n, L = mask.shape
    if L == 0:
        return np.zeros(n, dtype=np.int64)
    hit = mask.any(axis=1)
    first = np.argmax(mask, axis=1) + 1
    return np.where(hit, first, L).astype(np.int64)


if USE_NUMBA:
    maxmin_rates = maxmin_rates_numba
    first_hits = first_hits_numba
else:
    maxmin_rates = maxmin_rates_numpy
    first_hits = first_hits_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
