"""Compiled versus pure-Python kernels on the two hot paths.

    python3 benchmarks/bench_kernels.py [--repeats 3]
"""
import argparse
import time

import numpy as np

from qromkit import _pykernels, kernels
from qromkit.bench import random_table
from qromkit.qrom import QromSpec, build
from qromkit.simulate import NoiseModel, measured_qrom, run_shots
from qromkit.transpile import compile

try:
    from qromkit import _ckernels
except ImportError:
    _ckernels = None

NAMES = ("asap_depth", "trajectory_distribution", "run_batch")


def use(impl):
    for name in NAMES:
        setattr(kernels, name, getattr(impl, name))


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .`")

    lowered, _ = compile(build(QromSpec(7, random_table(7, 4, 0)), "naive"))
    t = lowered.table
    noisy = compile(measured_qrom(QromSpec(4, random_table(4, 4, 0)), "sawtooth"))[0]
    noise = NoiseModel(p2=0.01)

    cases = {
        f"asap_depth ({len(t):,} gates)":
            lambda: kernels.asap_depth(t.qptr, t.qubits, lowered.num_qubits),
        f"run_shots (sawtooth n=4, {len(noisy):,} gates, 500 shots, p2=0.01)":
            lambda: run_shots(noisy, noise, 500, 1, initial_state=0b10101),
    }
    print(f"{'case':<62} {'cython s':>10} {'python s':>10} {'speedup':>8}")
    for label, fn in cases.items():
        use(_ckernels)
        fast = best_of(fn, args.repeats)
        use(_pykernels)
        slow = best_of(fn, args.repeats)
        print(f"{label:<62} {fast:>10.4f} {slow:>10.4f} {slow / fast:>7.1f}x")
    use(_ckernels)


if __name__ == "__main__":
    main()
