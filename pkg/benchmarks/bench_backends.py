"""Benchmark the numba kernels against the pure-numpy fallback.

Times each hot kernel on representative workloads plus one full scenario
run per backend. Backend selection is an import-time decision, so the
full-run comparison re-executes this script in subprocesses with
RIGHTOFWAY_BACKEND set.

Usage: python benchmarks/bench_backends.py [--repeat N] [--kernel-only]
"""

import argparse
import importlib.resources
import math
import os
import subprocess
import sys
import time

import numpy as np


def bench(fn, repeat):
    fn()  # warm up (numba compiles here)
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_workloads(kernels):
    rng = np.random.default_rng(0)
    n_agents = 8
    states = np.column_stack([
        rng.uniform(-1, 1, n_agents),
        rng.uniform(-1, 1, n_agents),
        rng.uniform(-math.pi, math.pi, n_agents),
    ])
    pairs = np.array([(i, j) for i in range(n_agents)
                      for j in range(i + 1, n_agents)], dtype=np.int64)
    omegas = rng.uniform(-2, 2, n_agents)
    h = rng.uniform(-0.1, 2.0, pairs.shape[0])
    zs = np.minimum(np.arange(10001) * 1e-4, 1.0)
    gb = np.sort(rng.uniform(0.1, 5.0, 4))[::-1].copy()
    gd = rng.uniform(0.05, 0.6, 4)

    def many(fn, reps):
        def run():
            for _ in range(reps):
                fn()
        return run

    return [
        ("pair_terms (28 pairs x 2000)",
         many(lambda: kernels.pair_terms(states, pairs, 0.1, 0.0144), 2000)),
        ("lse_weights (28 terms x 2000)",
         many(lambda: kernels.lse_weights(h, 50.0), 2000)),
        ("pair_condition (28 pairs x 2000)",
         many(lambda: kernels.pair_condition(states, omegas, pairs, 0.1,
                                             0.0144, 1.2, 1.2), 2000)),
        ("rk4_step (8 agents x 2000)",
         many(lambda: kernels.rk4_step(states, omegas, 0.1, 0.033), 2000)),
        ("br_scan (10001 candidates x 50)",
         many(lambda: kernels.br_scan(zs, gb, gd, 1.2, 8.0, 5.0), 50)),
    ]


def run_kernels(repeat):
    from rightofway.backend import load_backend
    results = {}
    for name in ("numpy", "numba"):
        try:
            kernels = load_backend(name)
        except ImportError:
            print(f"backend {name} unavailable, skipping")
            continue
        results[name] = [(label, bench(fn, repeat))
                         for label, fn in kernel_workloads(kernels)]
    labels = [label for label, _ in next(iter(results.values()))]
    print(f"{'kernel workload':<34} " +
          " ".join(f"{n:>12}" for n in results) + "   speedup", flush=True)
    for idx, label in enumerate(labels):
        times = [results[n][idx][1] for n in results]
        ratio = times[0] / times[-1] if len(times) > 1 and times[-1] > 0 else float("nan")
        print(f"{label:<34} " +
              " ".join(f"{t * 1e3:>10.2f}ms" for t in times) +
              f"   {ratio:>6.1f}x", flush=True)


def run_scenario_subprocess(backend):
    with importlib.resources.as_file(
            importlib.resources.files("rightofway").joinpath("data/table1.cfg")) as cfg:
        code = (
            "import time, rightofway as row\n"
            "from rightofway.cli import load_scenario\n"
            f"config, _ = load_scenario({str(cfg)!r})\n"
            "row.run_scenario(config)  # warm up\n"
            "t0 = time.perf_counter()\n"
            "row.run_scenario(config)\n"
            "print(f'{row.active_backend()} full scenario: "
            "{time.perf_counter() - t0:.3f}s')\n"
        )
    env = dict(os.environ, RIGHTOFWAY_BACKEND=backend)
    subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--kernel-only", action="store_true",
                        help="skip the subprocess full-scenario comparison")
    args = parser.parse_args()
    run_kernels(args.repeat)
    if not args.kernel_only:
        print(flush=True)
        for backend in ("numpy", "numba"):
            run_scenario_subprocess(backend)


if __name__ == "__main__":
    main()
