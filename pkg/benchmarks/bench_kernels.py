"""Benchmark the two engine kernels against each other.

Runs the same fixed-length scenarios with the pure-Python backend and
(when built) the compiled Cython backend, verifies the traces are
bit-identical, and reports throughput in steps per second.

Usage:
    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from cubemorph._kernels import available_backends
from cubemorph.learning import run
from cubemorph.scenario import generate_scenario

CASES = (
    ("2Dto2D", 10, 7),
    ("2Dto2D", 40, 8),
    ("3Dto3D", 10, 9),
    ("3Dto3D", 30, 10),
)


def _run_with(backend: str, scenario):
    os.environ["CUBEMORPH_KERNEL"] = backend
    try:
        t0 = time.perf_counter()
        trace = run(scenario, stop_at_convergence=False)
        elapsed = time.perf_counter() - t0
    finally:
        os.environ.pop("CUBEMORPH_KERNEL", None)
    return trace, elapsed


def _traces_identical(a, b) -> bool:
    return (
        a.final_positions == b.final_positions
        and a.converged_at == b.converged_at
        and all(
            np.array_equal(getattr(a, f), getattr(b, f))
            for f in ("agents", "dests", "n_fwd", "n_rev", "accepted", "alphas", "potentials")
        )
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200_000,
                        help="steps per run (default 200000)")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timed repetitions per case, best kept (default 3)")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "fast" not in backends:
        print("compiled kernel not built; timing the pure backend only")

    header = f"{'case':<22}{'steps':>9}" + "".join(
        f"{b + ' steps/s':>16}" for b in backends
    )
    if len(backends) == 2:
        header += f"{'speedup':>10}{'identical':>11}"
    print(header)
    print("-" * len(header))

    for kind, n_agents, seed in CASES:
        scenario = generate_scenario(
            kind, n_agents, seed, tau=0.1, max_steps=args.steps
        )
        rates = {}
        traces = {}
        for backend in backends:
            best = float("inf")
            for _ in range(args.repeat):
                trace, elapsed = _run_with(backend, scenario)
                best = min(best, elapsed)
            rates[backend] = args.steps / best
            traces[backend] = trace
        row = f"{kind + f' n={n_agents}':<22}{args.steps:>9}" + "".join(
            f"{rates[b]:>16,.0f}" for b in backends
        )
        if len(backends) == 2:
            same = _traces_identical(traces["pure"], traces["fast"])
            row += f"{rates['fast'] / rates['pure']:>9.1f}x{'yes' if same else 'NO':>11}"
            if not same:
                print(row)
                print("ERROR: backends disagree on", kind, n_agents)
                return 1
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
