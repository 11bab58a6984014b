"""Time the compiled and numpy stepping kernels on the same problems.

    python benchmarks/bench_integrator.py [--repeat 3]

Each row integrates the flat oscillating wall with a fixed step count and
reports the best wall time per backend and the largest entrywise difference
between their results.
"""
import argparse
import time

import numpy as np

from dcesim import _backend
from dcesim.integrator import IntegrationSettings, integrate
from dcesim.modes import CavityConfig
from dcesim.trajectories import OscillatingScenario


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args(argv)
    if "compiled" not in _backend.available():
        print("compiled kernels not built; only the numpy backend is available")
        return 1
    traj = OscillatingScenario(0.0, 1.0, 1e-3, 1.3 * np.pi, 2).radial_trajectory()
    print(f"{'N':>4} {'method':>8} {'compiled [s]':>13} {'numpy [s]':>10} {'speedup':>8} {'max diff':>10}")
    for n in (2, 5, 10, 20, 40):
        cfg = CavityConfig(0.0, 1.0, n)
        for method in ("magnus4", "rk4"):
            times, outs = {}, {}
            for backend in ("compiled", "python"):
                settings = IntegrationSettings(n_steps=args.steps, method=method, backend=backend)
                times[backend], outs[backend] = best_time(lambda: integrate(traj, cfg, settings), args.repeat)
            diff = max(
                np.abs(outs["compiled"].transform.alpha - outs["python"].transform.alpha).max(),
                np.abs(outs["compiled"].transform.beta - outs["python"].transform.beta).max(),
            )
            print(f"{n:>4} {method:>8} {times['compiled']:>13.4f} {times['python']:>10.4f} "
                  f"{times['python'] / times['compiled']:>8.2f} {diff:>10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
