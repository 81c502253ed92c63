"""Compiled vs pure-Python DOPRI5 kernel.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Times three workloads on the reference model with both backends and
reports the largest difference between their results.
"""
import argparse
import time

import numpy as np

from popreplace import _backend
from popreplace.dynamics import CarryingCapacity, WolbachiaParams, build_wolbachia_model
from popreplace.integrate import ControlSignal, integrate_scalar
from popreplace.periodic import poincare_map


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def workloads(model):
    T = model.T
    grid = np.linspace(0.0, 1.0, 65)
    pulse = ControlSignal.indicator(6.0, 1e-3, 0.02)
    return {
        "one period, tol 1e-10": lambda b: np.array(
            [integrate_scalar(model, ControlSignal(), 0.369, (0.0, T), 1e-10, backend=b,
                              dense=False)]),
        "Phi on 65 points": lambda b: np.array(
            [poincare_map(model, 0.0, float(x), 1e-10, backend=b) for x in grid]),
        "dense, eps-pulse, 3 periods": lambda b: integrate_scalar(
            model, pulse, 0.0, (0.0, 3 * T), 1e-10, backend=b)(np.linspace(0, 3 * T, 1001)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    model = build_wolbachia_model(WolbachiaParams(), CarryingCapacity.cosine(0.06, 0.02, 12.0))
    if not _backend.HAVE_COMPILED:
        print("compiled kernel not available; only the Python backend can run")
        return
    print(f"{'workload':32s} {'python [s]':>12s} {'compiled [s]':>13s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in workloads(model).items():
        tp, yp = best_of(lambda: fn("python"), args.repeat)
        tc, yc = best_of(lambda: fn("compiled"), args.repeat)
        diff = float(np.max(np.abs(np.asarray(yp) - np.asarray(yc))))
        print(f"{name:32s} {tp:12.5f} {tc:13.6f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
