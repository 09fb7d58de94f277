#!/usr/bin/env python3
"""Benchmark the simulation kernel: numba JIT vs pure-numpy fallback.

Designs an observer for a seeded random detectable plant, then times the
co-simulation loop on both backends over a long horizon and checks that the
trajectories agree. The numba timing excludes the one-off JIT compilation
(a warm-up call absorbs it; with cache=True later processes skip it too).

Usage:
    python benchmarks/bench_sim.py [--n 6] [--p 2] [--horizon 200000] [--repeat 3]
"""

import argparse
import sys
import time

import numpy as np

from piobs import (
    DesignConfig,
    RandomInput,
    SimulationConfig,
    design_pi_observer,
    run_simulation,
)
from piobs._kernels import resolve_backend


def build_case(n, p, seed):
    rng = np.random.default_rng(seed)
    while True:
        A = rng.standard_normal((n, n))
        A *= 0.9 / max(np.abs(np.linalg.eigvals(A)))
        C = rng.standard_normal((p, n))
        B = rng.standard_normal((n, 1))
        try:
            system_observer = design_pi_observer((A, B, C), DesignConfig(seed=seed))
        except Exception:
            continue
        return system_observer.system, system_observer


def time_backend(system, observer, config, backend, repeat):
    run_simulation(system, observer, config, backend=backend)  # warm-up / JIT
    best = np.inf
    trace = None
    for _ in range(repeat):
        start = time.perf_counter()
        trace = run_simulation(system, observer, config, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, trace


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=6)
    parser.add_argument("--p", type=int, default=2)
    parser.add_argument("--horizon", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    system, observer = build_case(args.n, args.p, args.seed)
    config = SimulationConfig(
        horizon=args.horizon,
        input_signal=RandomInput(amplitude=1.0, seed=args.seed),
    )
    print(f"system: n={system.n}, m={system.m}, p={system.p}; "
          f"horizon={args.horizon}; repeat={args.repeat}")

    results = {}
    for backend in ("numpy", "numba"):
        try:
            resolve_backend(backend)
        except Exception as exc:
            print(f"{backend:>6}: unavailable ({exc})")
            continue
        seconds, trace = time_backend(system, observer, config, backend, args.repeat)
        results[backend] = (seconds, trace)
        print(f"{backend:>6}: {seconds:8.4f} s  "
              f"({args.horizon / seconds / 1e6:6.2f} M steps/s)")

    if len(results) == 2:
        t_np, trace_np = results["numpy"]
        t_nb, trace_nb = results["numba"]
        scale = max(1.0, np.abs(trace_np.x).max())
        dev = max(
            np.abs(trace_np.x - trace_nb.x).max(),
            np.abs(trace_np.xhat - trace_nb.xhat).max(),
            np.abs(trace_np.v - trace_nb.v).max(),
        )
        print(f"speedup: {t_np / t_nb:.1f}x   max trajectory deviation: "
              f"{dev:.3e} (scale {scale:.2e})")
        if dev > 1e-6 * scale:
            print("ERROR: backends disagree beyond rounding noise", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
