"""Bitrate-aware cache placement and adaptive-streaming simulation."""
from .catalog import Catalog, SegmentId, sample_sessions
from .config import RunConfig, load_config, shipped_config
from .errors import RippleCacheError
from .reward import beta, gamma, ripple_bitrate, ripple_bitrate_table
from .ripple_classic import (BipInstance, PlacementSolution, build_instance, delta_from_x,
                             feasible, iterate_placement, objective_value, solve_exact)
from .ripple_finder import run_ripple_finder
from .simcore import SimConfig, run_simulation
from .topology import Topology, desk_topology, generate_ba_topology

__version__ = "0.1.0"

__all__ = [
    "BipInstance", "Catalog", "PlacementSolution", "RippleCacheError", "RunConfig",
    "SegmentId", "SimConfig", "Topology", "beta", "build_instance", "delta_from_x",
    "desk_topology", "feasible", "gamma", "generate_ba_topology", "iterate_placement",
    "load_config", "objective_value", "ripple_bitrate", "ripple_bitrate_table",
    "run_ripple_finder", "run_simulation", "sample_sessions", "shipped_config", "solve_exact",
]
