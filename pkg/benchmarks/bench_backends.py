"""Benchmark the Monte Carlo sampling backends (numba vs numpy).

Builds rotated-surface FPN memory circuits, compiles them once, and times
``fpn.sampling.sample`` under each available backend on the same seed.  The
counter-based generator makes the backends bit-identical, which this script
re-checks on every configuration before reporting throughput.

Usage::

    python3 benchmarks/bench_backends.py [--distances 3 5] [--rounds 3]
                                         [--trials 20000] [--repeats 3]
                                         [--p 1e-3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fpn._kernels import available_backends
from fpn.circuits import NoiseModel, build_memory_circuit
from fpn.codes import gen_rotated_surface
from fpn.layout import build_fpn
from fpn.sampling import compile_circuit, sample
from fpn.scheduling import schedule_code, schedule_fpn


def build_case(distance: int, rounds: int, p: float):
    code = gen_rotated_surface(distance)
    layout = build_fpn(code)
    schedule = schedule_fpn(layout, schedule_code(code))
    circuit = build_memory_circuit(layout, schedule, rounds=rounds,
                                   basis="Z", noise=NoiseModel(p))
    return compile_circuit(circuit)


def time_backend(compiled, backend: str, trials: int, repeats: int,
                 seed: int) -> tuple[float, object]:
    batch = sample(compiled, trials, seed=seed, backend=backend)  # warm-up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        batch = sample(compiled, trials, seed=seed, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, batch


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--distances", type=int, nargs="+", default=[3, 5])
    ap.add_argument("--rounds", type=int, default=3)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"trials={args.trials} rounds={args.rounds} p={args.p} "
          f"(best of {args.repeats})")
    header = f"{'config':<14}" + "".join(f"{b + ' [s]':>12}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)

    for d in args.distances:
        compiled = build_case(d, args.rounds, args.p)
        times = {}
        batches = {}
        for b in backends:
            times[b], batches[b] = time_backend(
                compiled, b, args.trials, args.repeats, args.seed)
        ref = batches[backends[0]]
        for b in backends[1:]:
            other = batches[b]
            same = (np.array_equal(ref.detectors, other.detectors)
                    and np.array_equal(ref.flags, other.flags)
                    and np.array_equal(ref.observables, other.observables))
            if not same:
                print(f"d={d}: MISMATCH between {backends[0]} and {b}")
                return 1
        row = f"{'rotated d=' + str(d):<14}" + "".join(
            f"{times[b]:>12.4f}" for b in backends)
        if len(backends) > 1:
            row += f"{times['numpy'] / times['numba']:>10.2f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
