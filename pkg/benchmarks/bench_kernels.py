"""Compare the compiled and pure-Python integration kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--tmax 100]

Each case integrates the same problem with both backends, checks that the
terminal states agree, and prints the best wall time of ``--repeat`` runs.
"""
import argparse
import time

import numpy as np

from penaltyflow import IntegratorConfig, available_backends, get_problem, integrate


CASES = [
    # (label, problem, system, fused)
    ("flagship 2-d, fused field", "affine-quadratic-2d", "second_order", True),
    ("flagship 2-d, Python callback", "affine-quadratic-2d", "second_order", False),
    ("flagship 2-d first order, fused", "affine-quadratic-2d", "first_order", True),
    ("halfspace 2-d (non-affine)", "halfspace-2d", "second_order", True),
    ("affine quadratic 100-d, fused", "affine-quadratic-100d", "second_order", True),
]


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tmax", type=float, default=100.0)
    args = ap.parse_args()

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the Python backend is available")
    print(f"{'case':36s} {'steps':>7s} " + " ".join(f"{b:>10s}" for b in backends)
          + f" {'speedup':>8s} {'max |dx|':>9s}")
    for label, name, system, fused in CASES:
        bp = get_problem(name)
        times, finals, steps = {}, {}, 0
        for b in backends:
            cfg = IntegratorConfig(T_end=args.tmax, backend=b, fused=fused)
            dt, traj = best_time(lambda: integrate(bp.instance, cfg, system), args.repeat)
            times[b], finals[b], steps = dt, traj.x[-1], traj.stats.steps
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        diff = (float(np.max(np.abs(finals["python"] - finals["cython"])))
                if "cython" in finals else float("nan"))
        print(f"{label:36s} {steps:7d} " + " ".join(f"{times[b]:9.3f}s" for b in backends)
              + f" {speed:7.1f}x {diff:9.1e}")


if __name__ == "__main__":
    main()
