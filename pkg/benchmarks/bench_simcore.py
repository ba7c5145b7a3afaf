"""Compiled vs pure-Python simulation core.

    python benchmarks/bench_simcore.py [--replicas N] [--repeat K]

Times jump sampling and full replica runs on both backends, checks that
they produce identical output, and prints the speedup.
"""

import argparse
import time

import numpy as np

from bwalk import _backend, sim
from bwalk.kernel import build_kernel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def bench_jumps(core, tab, n, repeat):
    return best_of(lambda: core.sample_jumps(tab, sim.replica_rng(1, 0), n), repeat)


def bench_replicas(cfg, backend, repeat):
    def go():
        runs = [sim.simulate(cfg, i, backend) for i in range(cfg.replicas)]
        return [(r.events, [s.counts.tolist() for s in r.snapshots]) for r in runs]

    return best_of(go, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--jumps", type=int, default=200_000)
    ap.add_argument("--replicas", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    try:
        _backend.get_core("compiled")
    except ImportError:
        print("compiled core not built; nothing to compare")
        return 1
    rows = []
    for d, alpha in ((1, 1.0), (1, 0.5), (2, 1.5)):
        k = build_kernel(d, alpha, R=64 if d == 1 else 16)
        tab = k.sampler_tables()
        res = {b: bench_jumps(_backend.get_core(b), tab, args.jumps, args.repeat)
               for b in ("python", "compiled")}
        same = np.array_equal(res["python"][1], res["compiled"][1])
        rows.append((f"sample_jumps d={d} alpha={alpha:g} n={args.jumps}",
                     res["python"][0], res["compiled"][0], same))
        cfg = sim.SimConfig(d, alpha, 0.5, 3.0, (1.0, 3.0), args.replicas, 20240601,
                            R=64 if d == 1 else 16)
        res = {b: bench_replicas(cfg, b, args.repeat) for b in ("python", "compiled")}
        rows.append((f"simulate d={d} alpha={alpha:g} nu=0.5 t=3 x{args.replicas}",
                     res["python"][0], res["compiled"][0], res["python"][1] == res["compiled"][1]))
    print(f"{'case':48s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s} identical")
    for name, tp, tc, same in rows:
        print(f"{name:48s} {tp:10.4f} {tc:11.4f} {tp / tc:8.1f} {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
