"""Command-line interface: ``run``, ``sweep``, ``solve-placement``, ``gen-topology``."""
from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys

from .config import RunConfig, apply_param, load_config
from .errors import ConfigError, RippleCacheError
from .experiment import (build_world, make_planner, make_policy, plan_placement, results_csv,
                         run_points, summary_csv)
from .io import write_placement, write_topology
from .catalog import sample_sessions
from .reward import ripple_bitrate_table
from .ripple_classic import iterate_placement
from .ripple_finder import dump_internals, run_ripple_finder
from .simcore import NoCache, SimConfig, run_simulation
from .topology import generate_ba_topology

log = logging.getLogger("ripplecache")


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _config(path: str | None) -> RunConfig:
    return load_config(path) if path else RunConfig()


def cmd_run(args) -> int:
    cfg = _config(args.config)
    if args.policy:
        cfg = cfg.replace(policy=args.policy)
    if args.seeds:
        try:
            cfg = cfg.replace(seeds=tuple(int(s) for s in args.seeds.split(",") if s))
        except ValueError as e:
            raise ConfigError(f"bad --seeds value {args.seeds!r}") from e
    os.makedirs(args.out, exist_ok=True)
    results = run_points([cfg], jobs=args.jobs)
    _write(os.path.join(args.out, "results.csv"), results_csv(results))
    _write(os.path.join(args.out, "summary.csv"), summary_csv(results))
    if args.trace:
        topo, cat = build_world(cfg)
        seed = cfg.seeds[0]
        sched = sample_sessions(cat, sorted(topo.consumers), cfg.mean_session_interval,
                                cfg.horizon, seed, cfg.alpha)
        sim_cfg = SimConfig(seed=seed, adaptation=cfg.adaptation, log_hits=True)
        placement = planner = None
        if cfg.policy in ("classic", "finder"):
            warm = sched.before(cfg.warmup_fraction * cfg.horizon)
            placement, _, _ = plan_placement(cfg, topo, cat, warm, sim_cfg)
            planner = make_planner(cfg, topo, cat)
        policy = make_policy(cfg, placement, lambda s: cat.segment_size(s.b), planner)
        trace = run_simulation(topo, cat, policy, sched, sim_cfg)
        _write(os.path.join(args.out, "trace.csv"), trace.to_csv())
        _write(os.path.join(args.out, "hits.csv"), trace.hit_log_csv())
    print(f"wrote {len(results)} run rows to {args.out}")
    return 0


def _parse_params(specs: list[str]) -> list[tuple[str, list[str]]]:
    out = []
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"--param expects name=v1,v2,..., got {spec!r}")
        name, values = spec.split("=", 1)
        vals = [v for v in values.split(",") if v]
        if not vals:
            raise ConfigError(f"--param {name} has no values")
        out.append((name.strip(), vals))
    return out


def cmd_sweep(args) -> int:
    base = _config(args.config)
    params = _parse_params(args.param)
    names = [n for n, _ in params]
    points = []
    for combo in itertools.product(*(v for _, v in params)):
        cfg = base
        for name, value in zip(names, combo):
            cfg = apply_param(cfg, name, value)
        points.append(cfg)
    if args.policies:
        points = [p.replace(policy=pol) for p in points for pol in args.policies.split(",")]
    os.makedirs(args.out, exist_ok=True)
    results = run_points(points, jobs=args.jobs)
    _write(os.path.join(args.out, "results.csv"), results_csv(results))
    _write(os.path.join(args.out, "summary.csv"), summary_csv(results))
    print(f"wrote {len(results)} run rows for {len(points)} points to {args.out}")
    return 0


def cmd_solve(args) -> int:
    cfg = _config(args.config)
    if args.eta is not None:
        cfg = cfg.replace(eta=args.eta)
    topo, cat = build_world(cfg)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    sched = sample_sessions(cat, sorted(topo.consumers), cfg.mean_session_interval,
                            cfg.horizon, seed, cfg.alpha)
    warm = sched.before(cfg.warmup_fraction * cfg.horizon)
    sim_cfg = SimConfig(seed=seed, adaptation=cfg.adaptation)
    if args.mode == "classic":
        iters = args.iters if args.iters is not None else cfg.classic_max_iters
        res = iterate_placement(topo, cat, warm, eta=cfg.eta, sim_cfg=sim_cfg, max_iters=iters,
                                tol=cfg.classic_tol, budget=cfg.node_budget)
        sol, stats = res.solution, res.stats
        print(f"classic: {res.iterations} iterations, converged={res.converged}, "
              f"objective={sol.objective:.6g}, status={sol.status}")
    else:
        iters = args.iters if args.iters is not None else cfg.finder_max_iters
        stats = run_simulation(topo, cat, NoCache(), warm, sim_cfg).stats
        sol = run_ripple_finder(topo, stats, cat, max_iters=iters)
        print(f"finder: {sol.info['iterations']} iterations, converged={sol.info['converged']}")
        if args.dump_internals:
            for path in dump_internals(sol, args.dump_internals):
                log.info("wrote %s", path)
    with open(args.out, "w", newline="") as fh:
        n = write_placement(sol.x, fh)
    if args.dump_rb:
        with open(args.dump_rb, "w", newline="") as fh:
            ripple_bitrate_table(stats, topo, cat).to_csv(fh)
    print(f"wrote {n} placement rows to {args.out}")
    return 0


def cmd_gen_topology(args) -> int:
    n_as = args.n_as or max(2, round(args.nodes / 7))
    topo = generate_ba_topology(n_as, args.intra_links, args.seed, n_nodes=args.nodes,
                                n_producers=args.producers, n_consumers=args.consumers)
    write_topology(topo, args.out)
    print(f"wrote {topo!r} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ripplecache",
                                 description="Bitrate-aware cache placement simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration over its seeds")
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--policy")
    p.add_argument("--seeds", help="comma-separated seeds overriding the config")
    p.add_argument("--trace", action="store_true", help="also write the first seed's delivery trace")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a grid of parameter values")
    p.add_argument("--config")
    p.add_argument("--param", action="append", required=True, help="name=v1,v2,... (repeatable)")
    p.add_argument("--policies", help="comma-separated policies to cross with the grid")
    p.add_argument("--out", default="sweep-out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve-placement", help="compute a placement from a warm-up run")
    p.add_argument("--mode", choices=("classic", "finder"), required=True)
    p.add_argument("--config")
    p.add_argument("--eta", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="placement CSV")
    p.add_argument("--dump-internals", metavar="DIR")
    p.add_argument("--dump-rb", metavar="FILE")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen-topology", help="write a random two-level topology file")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-as", type=int)
    p.add_argument("--intra-links", type=int, default=1)
    p.add_argument("--producers", type=int, default=3)
    p.add_argument("--consumers", type=int, default=84)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_topology)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RippleCacheError as e:
        print(f"ripplecache: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"ripplecache: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
