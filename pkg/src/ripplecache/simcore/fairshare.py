"""Max-min fair bandwidth sharing among fluid flows."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels


def incidence_matrix(flow_links: Sequence[Sequence[int]], n_links: int) -> np.ndarray:
    inc = np.zeros((len(flow_links), n_links), dtype=np.bool_)
    for f, links in enumerate(flow_links):
        inc[f, list(links)] = True
    return inc


def fair_share_rates(flow_links: Sequence[Sequence[int]], capacity: Sequence[float]) -> np.ndarray:
    """Max-min fair rate of each flow given the link indices it traverses."""
    cap = np.asarray(capacity, dtype=np.float64)
    if len(flow_links) == 0:
        return np.zeros(0)
    return kernels.maxmin_rates(incidence_matrix(flow_links, cap.shape[0]), cap)
