"""Exact bitrate-aware cache placement as a binary program.

Decision variables are ``x_v(f, k, b)``: whether router ``v`` stores a
segment.  The hit indicator along a path is the prefix-OR of ``x``, so it is
derived rather than searched over.  A request class ``(d, s)`` earns
``theta_d(s) * gamma(RB_i, b)`` at the first hop ``i`` that holds ``s`` (the
producer when no router does).  Feasibility requires router capacities to
hold and, for consecutive entries of each per-path, per-bitrate popularity
ranking, that a less popular segment is not first found closer to the
consumer than a more popular one that is cached in-network.
"""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalog import Catalog, SegmentId, SessionSchedule
from .errors import InfeasibleX
from .reward import gamma, ripple_bitrate_table
from .simcore.engine import SimConfig, run_simulation
from .simcore.policies import NoCache, StaticPlacement
from .simcore.stats import StatsLedger
from .topology import Topology

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 2_000_000
_EPS = 1e-9


@dataclass(frozen=True)
class Demand:
    edge: int
    producer: int
    seg: SegmentId
    theta: float
    path: tuple[int, ...]


@dataclass
class BipInstance:
    """Placement problem data.

    ``gamma[(d, p)]`` is an ``(L, B)`` array of rewards by hop and rank;
    ``ranking[(d, p, b)]`` lists requested segments most popular first.
    ``big_m`` only matters to :func:`feasible`, which evaluates the
    popularity constraint in its big-M form.
    """

    paths: dict
    theta: dict
    gamma: dict
    capacity: dict
    sizes: tuple
    file_producer: dict
    ranking: dict = field(default_factory=dict)
    big_m: float = 1.0

    def __post_init__(self):
        self.capacity = {int(v): float(c) for v, c in self.capacity.items()}
        self.sizes = tuple(float(s) for s in self.sizes)
        if not self.ranking:
            self.ranking = popularity_ranking(self.theta, self.file_producer)
        self.demands = []
        for d in sorted(self.theta):
            for seg, th in sorted(self.theta[d].items()):
                if th <= 0:
                    continue
                p = self.file_producer[seg.f]
                self.demands.append(Demand(d, p, seg, float(th), tuple(self.paths[(d, p)])))
        for (d, p), g in self.gamma.items():
            if len(g) != len(self.paths[(d, p)]):
                raise ValueError(f"gamma table for path {(d, p)} has wrong length")

    def size(self, seg: SegmentId) -> float:
        return self.sizes[seg.b - 1]

    def reward(self, dem: Demand, hop: int) -> float:
        return float(self.gamma[(dem.edge, dem.producer)][hop - 1][dem.seg.b - 1]) * dem.theta


def popularity_ranking(theta: Mapping, file_producer: Mapping) -> dict:
    """Per-(edge, producer, rank) lists of requested segments, most popular first.

    Ties in request count go to the smaller ``(f, k)``.
    """
    out: dict = {}
    for d, counts in theta.items():
        for seg, th in counts.items():
            if th > 0:
                out.setdefault((d, file_producer[seg.f], seg.b), []).append((-th, seg.f, seg.k, seg))
    return {key: tuple(e[-1] for e in sorted(v)) for key, v in sorted(out.items())}


@dataclass
class PlacementSolution:
    """Router -> cached segments, plus solver bookkeeping."""

    x: dict
    objective: float = 0.0
    optimal: bool = True
    status: str = "optimal"
    nodes: int = 0
    info: dict = field(default_factory=dict)

    def rows(self):
        for v in sorted(self.x):
            for s in sorted(self.x[v]):
                yield (v, s.f, s.k, s.b)

    def segments_at(self, v: int) -> frozenset:
        return frozenset(self.x.get(v, ()))


def build_instance(topology: Topology, catalog: Catalog, theta: Mapping, rb_table,
                   eta: float, big_m: float = 1.0) -> BipInstance:
    """Assemble a placement instance from request counts and Ripple Bitrates."""
    producers = tuple(sorted(topology.producers))
    file_producer = {f: producers[catalog.producer_index(f)] for f in range(1, catalog.n_files + 1)}
    mu = catalog.mu_table
    paths, gam = {}, {}
    for d in topology.edges:
        for p in producers:
            path = topology.path(d, p)
            paths[(d, p)] = path.nodes
            g = np.empty((path.L, catalog.B))
            for i in range(1, path.L + 1):
                rb = rb_table.get(d, p, i)
                for b in range(1, catalog.B + 1):
                    g[i - 1, b - 1] = gamma(rb, b, mu, eta)
            gam[(d, p)] = g
    capacity = {v: topology.capacity(v) for v in topology.routers}
    theta = {d: {s: n for s, n in counts.items() if n > 0} for d, counts in theta.items()
             if d in topology.edges}
    return BipInstance(paths, theta, gam, capacity, tuple(catalog.sizes), file_producer, big_m=big_m)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def delta_from_x(x_path: Sequence[int]) -> np.ndarray:
    """Caching status along a path: ``delta[i] = x[0] or ... or x[i]``."""
    return np.maximum.accumulate(np.asarray(x_path, dtype=np.int64)) if len(x_path) else np.zeros(0, np.int64)


def _x_on_path(x: Mapping, seg, path) -> list[int]:
    # the producer (last hop) always holds the segment
    return [1 if seg in x.get(v, ()) else 0 for v in path[:-1]] + [1]


def feasible(inst: BipInstance, x: Mapping) -> tuple[bool, list[str]]:
    """Check capacity and popularity-order constraints; return ``(ok, violations)``."""
    problems = []
    for v, segs in x.items():
        if v not in inst.capacity:
            if v in inst.file_producer.values():
                continue
            problems.append(f"capacity: node {v} has no content store")
            continue
        used = sum(inst.size(s) for s in set(segs))
        if used > inst.capacity[v] + 1e-6:
            problems.append(f"capacity: node {v} holds {used:.0f} > {inst.capacity[v]:.0f} bytes")
    M = inst.big_m
    for (d, p, b), chain in inst.ranking.items():
        path = inst.paths[(d, p)]
        L = len(path)
        for more, less in zip(chain, chain[1:]):
            dm = delta_from_x(_x_on_path(x, more, path))
            dl = delta_from_x(_x_on_path(x, less, path))
            for i in range(1, L):
                if dm[L - 2] - dm[i - 1] > M - M * dl[i - 1]:
                    problems.append(f"popularity: {less} at hop <= {i} below {more} on path {(d, p)}")
                    break
    return (not problems), problems


def objective_value(inst: BipInstance, x: Mapping, check: bool = True) -> float:
    """Total reward ``sum theta * gamma * (delta_i - delta_{i-1})`` of placement ``x``."""
    if check:
        ok, problems = feasible(inst, x)
        if not ok:
            raise InfeasibleX("; ".join(problems[:3]))
    total = 0.0
    for dem in inst.demands:
        g = inst.gamma[(dem.edge, dem.producer)]
        delta = delta_from_x(_x_on_path(x, dem.seg, dem.path))
        prev = 0
        for i, di in enumerate(delta):
            if di != prev:
                total += g[i, dem.seg.b - 1] * dem.theta * (di - prev)
            prev = di
    return float(total)


def producer_only_value(inst: BipInstance) -> float:
    return float(sum(inst.reward(dem, len(dem.path)) for dem in inst.demands))


# --------------------------------------------------------------------------
# compiled form shared by the search routines
# --------------------------------------------------------------------------

class _Compiled:
    """Index-based view of an instance for the search routines."""

    def __init__(self, inst: BipInstance):
        self.inst = inst
        demands = inst.demands
        by_seg: dict = {}
        for j, dem in enumerate(demands):
            by_seg.setdefault(dem.seg, []).append(j)
        self.dem_L = [len(d.path) for d in demands]
        self.dem_val = [[inst.reward(d, h) for h in range(1, len(d.path) + 1)] for d in demands]
        self.dem_hop = [{v: i + 1 for i, v in enumerate(d.path[:-1])} for d in demands]

        # popularity neighbours per demand: (partner demand, partner is more popular)
        dem_index = {(d.edge, d.producer, d.seg): j for j, d in enumerate(demands)}
        self.pairs = [[] for _ in demands]
        for (d, p, b), chain in inst.ranking.items():
            ids = [dem_index.get((d, p, s)) for s in chain]
            for a, c in zip(ids, ids[1:]):
                if a is None or c is None:
                    continue
                self.pairs[a].append((c, False))
                self.pairs[c].append((a, True))

        def seg_score(s):
            return sum(demands[j].theta for j in by_seg[s]) * inst.sizes[s.b - 1]

        self.segs = sorted(by_seg, key=lambda s: (-seg_score(s), s.f, s.k, -s.b))
        self.seg_dems = [by_seg[s] for s in self.segs]
        self.seg_size = [inst.size(s) for s in self.segs]
        self.seg_order = {s: u for u, s in enumerate(self.segs)}
        self.dem_seg = [self.seg_order[d.seg] for d in demands]
        routers = []
        for u, s in enumerate(self.segs):
            first_hop: dict = {}
            for j in self.seg_dems[u]:
                for v, h in self.dem_hop[j].items():
                    first_hop[v] = min(first_hop.get(v, h), h)
            cand = [v for v in first_hop if inst.capacity.get(v, 0.0) + _EPS >= self.seg_size[u]]
            routers.append(sorted(cand, key=lambda v: (first_hop[v], v)))
        self.seg_routers = routers

    def base_value(self, u):
        return sum(self.dem_val[j][self.dem_L[j] - 1] for j in self.seg_dems[u])

    def best_value(self, u):
        total = 0.0
        cand = set(self.seg_routers[u])
        for j in self.seg_dems[u]:
            vals = [self.dem_val[j][h - 1] for v, h in self.dem_hop[j].items() if v in cand]
            vals.append(self.dem_val[j][self.dem_L[j] - 1])
            total += max(vals)
        return total

    @staticmethod
    def pair_ok(h_more: int, h_less: int, L: int) -> bool:
        # big-M constraint on binaries: violated iff h_less < h_more <= L - 1
        return not (h_less < h_more <= L - 1)


def _empty_x(inst):
    return {v: frozenset() for v in inst.capacity}


# --------------------------------------------------------------------------
# greedy incumbent
# --------------------------------------------------------------------------

def greedy_placement(inst: BipInstance) -> PlacementSolution:
    """Lazy greedy by marginal reward per byte, respecting all constraints."""
    cp = _Compiled(inst)
    n_dem = len(inst.demands)
    h = [cp.dem_L[j] for j in range(n_dem)]
    rem = dict(inst.capacity)
    x = {v: set() for v in inst.capacity}

    def gain(u, v):
        g = 0.0
        for j in cp.seg_dems[u]:
            hv = cp.dem_hop[j].get(v)
            if hv is not None and hv < h[j]:
                g += cp.dem_val[j][hv - 1] - cp.dem_val[j][h[j] - 1]
        return g

    heap = []
    for u in range(len(cp.segs)):
        for v in cp.seg_routers[u]:
            g = gain(u, v)
            if g > _EPS:
                heap.append((-g / cp.seg_size[u], u, v))
    heapq.heapify(heap)
    while heap:
        key, u, v = heapq.heappop(heap)
        if rem[v] + _EPS < cp.seg_size[u] or cp.segs[u] in x[v]:
            continue
        g = gain(u, v)
        if g <= _EPS:
            continue
        if -g / cp.seg_size[u] > key + 1e-12:
            heapq.heappush(heap, (-g / cp.seg_size[u], u, v))
            continue
        new_h = {}
        for j in cp.seg_dems[u]:
            hv = cp.dem_hop[j].get(v)
            if hv is not None and hv < h[j]:
                new_h[j] = hv
        ok = True
        for j, hj in new_h.items():
            L = cp.dem_L[j]
            for other, other_more in cp.pairs[j]:
                ho = new_h.get(other, h[other])
                if other_more and not cp.pair_ok(ho, hj, L):
                    ok = False
                elif not other_more and not cp.pair_ok(hj, ho, L):
                    ok = False
            if not ok:
                break
        if not ok:
            continue
        for j, hj in new_h.items():
            h[j] = hj
        x[v].add(cp.segs[u])
        rem[v] -= cp.seg_size[u]
    xs = {v: frozenset(s) for v, s in x.items()}
    value = sum(cp.dem_val[j][h[j] - 1] for j in range(n_dem))
    return PlacementSolution(xs, float(value), optimal=False, status="heuristic")


# --------------------------------------------------------------------------
# exact branch and bound
# --------------------------------------------------------------------------

def solve_exact(inst: BipInstance, budget: int = DEFAULT_BUDGET,
                incumbent: PlacementSolution | None = None) -> PlacementSolution:
    """Depth-first branch and bound over the placement variables.

    Variables are visited segment by segment (descending ``theta * size``),
    routers edge-first, trying ``x = 1`` before ``x = 0``.  The bound adds,
    for every segment not yet fully decided, its best reward with capacity
    and popularity ignored.  When more than ``budget`` nodes are expanded the
    best placement found so far is returned with ``optimal=False``.
    """
    cp = _Compiled(inst)
    n_seg = len(cp.segs)
    units = [(u, v) for u in range(n_seg) for v in cp.seg_routers[u]]
    n = len(units)
    last_unit = {}
    for i, (u, _) in enumerate(units):
        last_unit[u] = i

    # segments without any candidate router are fixed at the producer
    fixed = sum(cp.base_value(u) for u in range(n_seg) if not cp.seg_routers[u])
    ub = [0.0 if not cp.seg_routers[u] else cp.best_value(u) for u in range(n_seg)]
    suffix = [0.0] * (n_seg + 1)
    for u in range(n_seg - 1, -1, -1):
        suffix[u] = suffix[u + 1] + ub[u]

    h = [cp.dem_L[j] for j in range(len(inst.demands))]
    complete = [not cp.seg_routers[u] for u in range(n_seg)]
    seg_val = [0.0] * n_seg
    chosen: list[list] = [[] for _ in range(n_seg)]
    rem = dict(inst.capacity)
    done_val = fixed

    if incumbent is not None:
        ok, _ = feasible(inst, incumbent.x)
        if not ok:
            raise InfeasibleX("incumbent placement is infeasible")
        best_val = objective_value(inst, incumbent.x, check=False)
        best_x = {v: frozenset(s) for v, s in incumbent.x.items()}
    else:
        best_x = _empty_x(inst)
        best_val = objective_value(inst, best_x, check=False)

    def finish_segment(u):
        """Fix first hits of segment ``u``; return False on a popularity violation."""
        val = 0.0
        routers = chosen[u]
        for j in cp.seg_dems[u]:
            hops = cp.dem_hop[j]
            hj = cp.dem_L[j]
            for v in routers:
                hv = hops.get(v)
                if hv is not None and hv < hj:
                    hj = hv
            h[j] = hj
            val += cp.dem_val[j][hj - 1]
        seg_val[u] = val
        complete[u] = True
        for j in cp.seg_dems[u]:
            L = cp.dem_L[j]
            for other, other_more in cp.pairs[j]:
                if not complete[cp.dem_seg[other]]:
                    continue
                if other_more:
                    if not cp.pair_ok(h[other], h[j], L):
                        return False
                elif not cp.pair_ok(h[j], h[other], L):
                    return False
        return True

    # routers of the same segment still undecided after unit i
    open_after = [None] * n
    for i, (u, _) in enumerate(units):
        open_after[i] = tuple(v for (_, v) in units[i + 1:last_unit[u] + 1])

    def partial_bound(u, i):
        # units of segment u up to and including i are decided
        rest = open_after[i]
        total = 0.0
        for j in cp.seg_dems[u]:
            hops = cp.dem_hop[j]
            vals = cp.dem_val[j]
            hj = cp.dem_L[j]
            for v in chosen[u]:
                hv = hops.get(v)
                if hv is not None and hv < hj:
                    hj = hv
            best = vals[hj - 1]
            for v in rest:
                hv = hops.get(v)
                if hv is not None and hv < hj and vals[hv - 1] > best:
                    best = vals[hv - 1]
            total += best
        return total

    applied = [None] * n
    next_opt = [0] * (n + 1)
    feasible_flag = [True] * n
    nodes = 0
    exhausted = True

    def apply(i, val):
        nonlocal done_val
        u, v = units[i]
        applied[i] = val
        if val:
            rem[v] -= cp.seg_size[u]
            chosen[u].append(v)
        ok = True
        if last_unit[u] == i:
            ok = finish_segment(u)
            done_val += seg_val[u]
        feasible_flag[i] = ok
        return ok

    def undo(i):
        nonlocal done_val
        u, v = units[i]
        if last_unit[u] == i:
            done_val -= seg_val[u]
            complete[u] = False
            for j in cp.seg_dems[u]:
                h[j] = cp.dem_L[j]
        if applied[i]:
            rem[v] += cp.seg_size[u]
            chosen[u].pop()
        applied[i] = None

    def bound(i):
        u = units[i][0]
        if last_unit[u] == i:
            return done_val + suffix[u + 1]
        return done_val + partial_bound(u, i) + suffix[u + 1]

    i = 0
    while i >= 0:
        if i == n:
            if done_val > best_val + _EPS:
                best_val = done_val
                best_x = _empty_x(inst)
                acc: dict = {}
                for u in range(n_seg):
                    for v in chosen[u]:
                        acc.setdefault(v, set()).add(cp.segs[u])
                best_x.update({v: frozenset(s) for v, s in acc.items()})
            i -= 1
            if i >= 0:
                undo(i)
            continue
        opt = next_opt[i]
        if opt < 2:
            next_opt[i] = opt + 1
            val = 1 if opt == 0 else 0
            u, v = units[i]
            if val == 1 and rem[v] + _EPS < cp.seg_size[u]:
                continue
            nodes += 1
            if nodes > budget:
                exhausted = False
                break
            if apply(i, val) and bound(i) > best_val + _EPS:
                i += 1
                next_opt[i] = 0
            else:
                undo(i)
            continue
        next_opt[i] = 0
        i -= 1
        if i >= 0:
            undo(i)

    if n == 0:
        best_val = max(best_val, fixed + sum(cp.base_value(u) for u in range(n_seg) if cp.seg_routers[u]))
    status = "optimal" if exhausted else "budget_exceeded"
    if not exhausted:
        log.info("branch and bound stopped after %d nodes; returning incumbent", budget)
    return PlacementSolution(best_x, float(best_val), optimal=exhausted, status=status, nodes=nodes)


# --------------------------------------------------------------------------
# simulate -> place loop
# --------------------------------------------------------------------------

@dataclass
class IterationResult:
    solution: PlacementSolution
    iterations: int
    converged: bool
    objectives: list
    stats: StatsLedger


def iterate_placement(topology: Topology, catalog: Catalog, schedule: SessionSchedule,
                      eta: float = 1.0, sim_cfg: SimConfig | None = None,
                      max_iters: int = 10, tol: float = 0.01,
                      budget: int = DEFAULT_BUDGET, use_greedy: bool = True,
                      stats: StatsLedger | None = None) -> IterationResult:
    """Alternate simulation and optimisation until the objective settles.

    Iteration 0 simulates ``schedule`` with empty stores.  Each iteration
    rebuilds the instance from the latest request counts and Ripple
    Bitrates, solves it, and (unless this was the last permitted iteration)
    re-simulates with the new placement.  Stops when two consecutive
    objectives differ by less than ``tol`` relative.
    """
    sim_cfg = sim_cfg or SimConfig()
    if stats is None:
        stats = run_simulation(topology, catalog, NoCache(), schedule, sim_cfg).stats
    objectives: list = []
    sol = None
    converged = False
    it = 0
    for it in range(1, max(1, max_iters) + 1):
        rb = ripple_bitrate_table(stats, topology, catalog)
        inst = build_instance(topology, catalog, stats.theta, rb, eta)
        start = greedy_placement(inst) if use_greedy else None
        sol = solve_exact(inst, budget=budget, incumbent=start)
        objectives.append(sol.objective)
        if len(objectives) >= 2:
            prev = objectives[-2]
            if abs(sol.objective - prev) <= tol * max(abs(prev), _EPS):
                converged = True
                break
        if it >= max_iters:
            break
        policy = StaticPlacement(sol.x, lambda s: catalog.segment_size(s.b))
        stats = run_simulation(topology, catalog, policy, schedule, sim_cfg).stats
    sol.info.update(iterations=it, converged=converged, objectives=list(objectives))
    return IterationResult(sol, it, converged, objectives, stats)


def placement_from_rows(rows: Iterable[Sequence[int]]) -> dict:
    x: dict = {}
    for v, f, k, b in rows:
        x.setdefault(int(v), set()).add(SegmentId(int(f), int(k), int(b)))
    return {v: frozenset(s) for v, s in x.items()}
