"""Compare the numba and pure-numpy kernels.

Two measurements:

* the max-min fair-share kernel on random flow/link incidence matrices of
  the sizes the simulator produces, called directly through both
  implementations;
* a full desk-scale simulation run in fresh interpreters with
  ``RIPPLECACHE_NUMBA=1`` and ``RIPPLECACHE_NUMBA=0`` (the backend is picked
  at import time).

Usage: python benchmarks/bench_kernels.py [--repeat N] [--skip-sim]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ripplecache import kernels

SIM_SNIPPET = """
import time
from ripplecache import kernels
from ripplecache.config import RunConfig
from ripplecache.experiment import build_world, make_policy
from ripplecache.catalog import sample_sessions
from ripplecache.simcore import SimConfig, run_simulation
cfg = RunConfig(policy="ce2-lfu", horizon={horizon})
topo, cat = build_world(cfg)
sched = sample_sessions(cat, sorted(topo.consumers), cfg.mean_session_interval, cfg.horizon, 1)
run_simulation(topo, cat, make_policy(cfg), sched.before(60), SimConfig(seed=1))  # warm the JIT
t = time.perf_counter()
out = run_simulation(topo, cat, make_policy(cfg), sched, SimConfig(seed=1))
print(kernels.backend(), time.perf_counter() - t, out.events)
"""


def random_incidence(n_flows, n_links, hops, rng):
    inc = np.zeros((n_flows, n_links), dtype=np.bool_)
    for f in range(n_flows):
        inc[f, rng.choice(n_links, size=min(hops, n_links), replace=False)] = True
    return inc


def bench_maxmin(repeat):
    rng = np.random.default_rng(0)
    print(f"{'flows':>6} {'links':>6} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for n_flows, n_links in ((8, 60), (32, 60), (128, 200), (512, 400)):
        inc = random_incidence(n_flows, n_links, 6, rng)
        cap = rng.uniform(5e6, 20e6, n_links)
        ref = kernels.maxmin_rates_numpy(inc, cap)
        np_t = min(timeit.repeat(lambda: kernels.maxmin_rates_numpy(inc, cap),
                                 number=20, repeat=repeat)) / 20
        if kernels.HAVE_NUMBA:
            assert np.allclose(kernels.maxmin_rates_numba(inc, cap), ref)
            nb_t = min(timeit.repeat(lambda: kernels.maxmin_rates_numba(inc, cap),
                                     number=20, repeat=repeat)) / 20
            print(f"{n_flows:>6} {n_links:>6} {np_t * 1e6:>10.1f} {nb_t * 1e6:>10.1f} "
                  f"{np_t / nb_t:>7.1f}x")
        else:
            print(f"{n_flows:>6} {n_links:>6} {np_t * 1e6:>10.1f} {'n/a':>10}")


def bench_simulation(horizon):
    print(f"\nfull simulation, horizon {horizon:g} s")
    for flag in ("1", "0"):
        env = dict(os.environ, RIPPLECACHE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", SIM_SNIPPET.format(horizon=horizon)],
                             env=env, capture_output=True, text=True, check=True)
        backend, seconds, events = res.stdout.split()
        print(f"  RIPPLECACHE_NUMBA={flag}: backend {backend:<6} {float(seconds):7.2f} s "
              f"({events} events)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--horizon", type=float, default=1500.0)
    ap.add_argument("--skip-sim", action="store_true")
    args = ap.parse_args()
    if kernels.HAVE_NUMBA:
        # compile outside the timed region
        kernels.maxmin_rates_numba(np.ones((1, 1), dtype=np.bool_), np.ones(1))
    bench_maxmin(args.repeat)
    if not args.skip_sim:
        bench_simulation(args.horizon)


if __name__ == "__main__":
    main()
