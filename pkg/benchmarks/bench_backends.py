"""Timing comparison of the compiled and pure-numpy simulation kernels.

Runs the same seeded workloads through both backends, checks that the
outputs agree bit for bit, and prints a small table. Invoke directly:

    python3 benchmarks/bench_backends.py [--stages N] [--trajectories K]
"""

import argparse
import time

import numpy as np

from itmdp import (
    DetectorParams,
    ItParams,
    POLICY_DEFEND,
    SimConfig,
    ThresholdPolicy,
    build_mdp,
    simulate,
    simulate_pomdp,
)

PARAMS = ItParams(p_A=0.5, p_F=0.5, p_D=0.6, p_R=0.9,
                  c_A=1.0, c_D=0.5, c_F=3.0, c_R=1.5)
DETECTOR = DetectorParams(q_A_given_N=0.05, q_N_given_A=0.2)


def time_call(fn, repeats=5):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--stages", type=int, default=200_000)
    parser.add_argument("--trajectories", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    model = build_mdp(PARAMS)
    cfg = SimConfig(stages=args.stages, trajectories=args.trajectories,
                    seed=2024)
    rule = ThresholdPolicy(0.5, 0.5)

    workloads = [
        ("simulate", lambda backend: simulate(
            model, POLICY_DEFEND, cfg, backend=backend)),
        ("belief-sim", lambda backend: simulate_pomdp(
            model, DETECTOR, rule, cfg, backend=backend)),
    ]

    total_steps = args.stages * args.trajectories
    print(f"workload sizing: {args.stages} stages x "
          f"{args.trajectories} trajectories = {total_steps:,} steps")
    print()
    print(f"{'workload':<12} {'backend':<8} {'best of ' + str(args.repeats):>12} "
          f"{'steps/s':>12}")
    for name, run in workloads:
        run("numba")  # compile outside the timed region
        rows = []
        for backend in ("numba", "numpy"):
            best, result = time_call(lambda: run(backend), args.repeats)
            rows.append((backend, best, result))
            print(f"{name:<12} {backend:<8} {best:>11.4f}s "
                  f"{total_steps / best:>12,.0f}")
        (_, _, a), (_, _, b) = rows
        match = np.array_equal(np.asarray(a.occupancy),
                               np.asarray(b.occupancy)) \
            and a.mean_cost_per_stage == b.mean_cost_per_stage
        speedup = rows[1][1] / rows[0][1]
        print(f"{'':<12} agree={'yes' if match else 'NO'}  "
              f"numba speedup x{speedup:.1f}")
        print()


if __name__ == "__main__":
    main()
