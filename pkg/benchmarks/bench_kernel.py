"""Compare the compiled and numpy integration kernels on the same closed loop.

    python benchmarks/bench_kernel.py [--agents 20 68 200] [--t-final 50] [--repeat 3]
"""
import argparse
import time

import numpy as np

from weaksync import _kernel
from weaksync.control import triple_integrator
from weaksync.networks import spanning_tree_network
from weaksync.simulator import ScenarioConfig, simulate


def best_of(cfg, repeat):
    times = []
    result = None
    for _ in range(repeat):
        started = time.perf_counter()
        result = simulate(cfg)
        times.append(time.perf_counter() - started)
    return min(times), result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--agents", type=int, nargs="+", default=[20, 68, 200])
    parser.add_argument("--t-final", type=float, default=50.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = sorted(_kernel.AVAILABLE)
    print(f"backends: {', '.join(backends)}   t_final={args.t_final}   best of {args.repeat}")
    print(f"{'agents':>6} {'steps':>7} " + " ".join(f"{b + ' [s]':>12}" for b in backends) + f" {'speedup':>8} {'max |dx|':>9}")
    for n in args.agents:
        graph = spanning_tree_network(n, seed=n).graph
        runs = {}
        for b in backends:
            cfg = ScenarioConfig(graph, triple_integrator(), t_final=args.t_final, seed=1, backend=b)
            runs[b] = best_of(cfg, args.repeat)
        steps = runs[backends[0]][1].stats["steps"]
        cols = " ".join(f"{runs[b][0]:12.4f}" for b in backends)
        if len(backends) == 2:
            speedup = runs["python"][0] / runs["cython"][0]
            diff = float(np.max(np.abs(runs["python"][1].x - runs["cython"][1].x)))
            print(f"{n:6d} {steps:7d} {cols} {speedup:7.1f}x {diff:9.1e}")
        else:
            print(f"{n:6d} {steps:7d} {cols} {'-':>8} {'-':>9}")


if __name__ == "__main__":
    main()
