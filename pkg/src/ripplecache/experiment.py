"""Experiment orchestration: warm-up, placement, measurement, aggregation.

One run is a (configuration, seed) pair.  The session schedule covers the
whole horizon; the first ``warmup_fraction`` of it drives the initial
placement (or simply warms the caches for reactive policies) and sessions
starting inside that window are excluded from the QoE metrics.  Placement
policies are then recomputed every ``replan_interval`` seconds of the
measured run from the statistics gathered so far.
"""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .baselines import CE2, ProbCache
from .catalog import Catalog, sample_sessions
from .config import RunConfig
from .errors import ConfigError
from .io import read_topology
from .metrics import RunQoE, mean_ci, session_qoe, store_size_from_omega, summarize_sessions
from .reward import ripple_bitrate_table
from .ripple_classic import build_instance, greedy_placement, iterate_placement, solve_exact
from .ripple_finder import run_ripple_finder
from .simcore import NoCache, PeriodicPlacement, SimConfig, StaticPlacement, run_simulation
from .topology import desk_topology, generate_ba_topology

log = logging.getLogger(__name__)

RESULTS_HEADER = ["profile", "policy", "omega", "alpha", "eta", "seed",
                  "avg_bitrate_mbps", "switch_count_mean", "rebuffer_pct_mean"]
SUMMARY_HEADER = ["profile", "policy", "omega", "alpha", "eta", "n_seeds",
                  "avg_bitrate_mbps", "avg_bitrate_ci95",
                  "switch_count_mean", "switch_count_ci95",
                  "rebuffer_pct_mean", "rebuffer_pct_ci95"]

# simulate -> place rounds for the distributed heuristic
FINDER_ROUNDS = 3


def make_catalog(cfg: RunConfig, n_producers: int) -> Catalog:
    return Catalog(cfg.files, cfg.segments, tuple(x * 1e6 for x in cfg.ladder_mbps),
                   cfg.segment_duration, n_producers)


def make_topology(cfg: RunConfig):
    bw, delay = cfg.bandwidth_mbps * 1e6, cfg.delay_ms / 1e3
    if cfg.topology == "desk":
        return desk_topology(0.0, cfg.n_consumers, bw, delay)
    if cfg.topology == "ba":
        return generate_ba_topology(cfg.n_as, cfg.intra_links, cfg.topology_seed,
                                    n_nodes=cfg.n_nodes, n_producers=cfg.n_producers,
                                    n_consumers=cfg.n_consumers, bandwidth=bw,
                                    intra_delay=delay, inter_delay=5 * delay)
    return read_topology(cfg.topology_file)


def build_world(cfg: RunConfig):
    """Topology with sized stores plus the matching catalog."""
    topo = make_topology(cfg)
    cat = make_catalog(cfg, len(topo.producers))
    cap = store_size_from_omega(cat.total_bytes, len(topo.nodes), cfg.omega)
    return topo.with_cache(cap), cat


@dataclass
class RunResult:
    cfg: RunConfig
    seed: int
    qoe: RunQoE
    placement_iterations: int = 0
    placement_converged: bool = True
    requests: int = 0
    completed: int = 0
    aborted: int = 0
    extra: dict = field(default_factory=dict)

    def row(self) -> list:
        c = self.cfg
        return [c.profile, c.policy, c.omega, c.alpha, c.eta, self.seed,
                self.qoe.avg_bitrate_mbps, self.qoe.switch_count_mean, self.qoe.rebuffer_pct_mean]


def plan_placement(cfg: RunConfig, topo, cat, warm, sim_cfg: SimConfig):
    """Initial placement from the warm-up window: ``(placement, iterations, converged)``."""
    size_of = lambda s: cat.segment_size(s.b)  # noqa: E731
    if cfg.policy == "classic":
        res = iterate_placement(topo, cat, warm, eta=cfg.eta, sim_cfg=sim_cfg,
                                max_iters=cfg.classic_max_iters, tol=cfg.classic_tol,
                                budget=cfg.node_budget)
        return res.solution.x, res.iterations, res.converged
    stats = run_simulation(topo, cat, NoCache(), warm, sim_cfg).stats
    sol = None
    for r in range(FINDER_ROUNDS):
        sol = run_ripple_finder(topo, stats, cat, max_iters=cfg.finder_max_iters,
                                keep_history=False)
        if r + 1 < FINDER_ROUNDS:
            stats = run_simulation(topo, cat, StaticPlacement(sol.x, size_of), warm, sim_cfg).stats
    return sol.x, sol.info["iterations"], sol.info["converged"]


def make_planner(cfg: RunConfig, topo, cat):
    """Placement function of run statistics, used for in-run replanning."""
    if cfg.policy == "classic":
        def plan(stats):
            rb = ripple_bitrate_table(stats, topo, cat)
            inst = build_instance(topo, cat, stats.theta, rb, cfg.eta)
            return solve_exact(inst, cfg.node_budget, incumbent=greedy_placement(inst)).x
    else:
        def plan(stats):
            return run_ripple_finder(topo, stats, cat, max_iters=cfg.finder_max_iters,
                                     keep_history=False).x
    return plan


def make_policy(cfg: RunConfig, placement=None, size_of=None, planner=None):
    p = cfg.policy
    if p == "none":
        return NoCache()
    if p in ("ce2-lru", "ce2-lfu"):
        return CE2(p.split("-", 1)[1])
    if p == "probcache":
        return ProbCache()
    if p in ("classic", "finder"):
        if planner is not None and cfg.replan_interval > 0:
            return PeriodicPlacement(placement, size_of, planner, cfg.replan_interval)
        return StaticPlacement(placement, size_of)
    raise ConfigError(f"unknown policy {p!r}")


def run_one(cfg: RunConfig, seed: int, check_invariants: bool = False,
            keep_trace: bool = False) -> RunResult:
    topo, cat = build_world(cfg)
    sched = sample_sessions(cat, sorted(topo.consumers), cfg.mean_session_interval,
                            cfg.horizon, seed, cfg.alpha)
    warm_end = cfg.warmup_fraction * cfg.horizon
    sim_cfg = SimConfig(seed=seed, adaptation=cfg.adaptation, check_invariants=check_invariants)
    size_of = lambda s: cat.segment_size(s.b)  # noqa: E731
    iters, conv, placement, planner = 0, True, None, None
    if cfg.policy in ("classic", "finder"):
        placement, iters, conv = plan_placement(cfg, topo, cat, sched.before(warm_end), sim_cfg)
        planner = make_planner(cfg, topo, cat)
    policy = make_policy(cfg, placement, size_of, planner)
    trace = run_simulation(topo, cat, policy, sched, sim_cfg)
    measured = [session_qoe(tr, cat.ladder) for tr in trace.sessions if tr.start >= warm_end]
    res = RunResult(cfg, seed, summarize_sessions(measured), iters, conv,
                    trace.requests, trace.completed, trace.aborted)
    res.extra["sessions"] = measured
    res.extra["replans"] = trace.replans
    if placement is not None:
        res.extra["placement"] = placement
    if keep_trace:
        res.extra["trace"] = trace
    return res


def _run_task(args):
    cfg, seed, check = args
    return run_one(cfg, seed, check_invariants=check)


def run_points(points: Sequence[RunConfig], jobs: int = 1,
               check_invariants: bool = False) -> list[RunResult]:
    """Run every seed of every point; results come back in submission order."""
    tasks = [(cfg, s, check_invariants) for cfg in points for s in cfg.seeds]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_task, tasks))


def results_csv(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULTS_HEADER)
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def summarize(results: Sequence[RunResult]) -> list[list]:
    """One row per (profile, policy, omega, alpha, eta) with means and CI half widths."""
    groups: dict = {}
    for r in results:
        c = r.cfg
        groups.setdefault((c.profile, c.policy, c.omega, c.alpha, c.eta), []).append(r)
    rows = []
    for key, rs in groups.items():
        row = list(key) + [len(rs)]
        for attr in ("avg_bitrate_mbps", "switch_count_mean", "rebuffer_pct_mean"):
            row += list(mean_ci(getattr(r.qoe, attr) for r in rs))
        rows.append(row)
    return rows


def summary_csv(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    w.writerows(summarize(results))
    return buf.getvalue()
