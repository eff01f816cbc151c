"""Compare the compiled and numpy kernels on typical evaluation workloads.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time per kernel and the speedup of the compiled
backend, plus the largest absolute difference between the two outputs.
"""
import argparse
import math
import time

import numpy as np

from pkmopt import _pykernels
from pkmopt.config import default_config
from pkmopt.geometry import RDWSpec, grid_points

try:
    from pkmopt import _ckernels
except ImportError:
    _ckernels = None

UPS_DESIGN = np.array([0.7, 0.0, 0.0, 1.2, 0.0, 0.0, 0.7, math.pi / 2, 0.0, 1.2, math.pi / 2, 0.0, 2.5])
RPR_DESIGN = np.array([3.0, 0.3, 2.3, 4.4])


def workloads():
    ups_poses = grid_points(default_config("ups2").rdw, "fine")
    rpr_poses = grid_points(RDWSpec("box-times-interval", (0, 0, 0), (0.3, 0.3, 0.261), 3, 21), "fine")
    rng = np.random.default_rng(0)
    rho = rng.uniform(1.0, 3.0, size=(5000, 2))
    rewards = rng.random(5000)
    lowers = np.linspace(rho.min(), rho.max() / 1.5, 1000)
    thetas = np.linspace(math.pi / 4, 3 * math.pi / 4, 10001)
    return {
        "lambda_batch (10001 poses)": lambda k: k.lambda_batch(4.0, 1.0, thetas),
        f"ups_batch ({len(ups_poses)} poses)": lambda k: k.ups_batch(UPS_DESIGN, ups_poses, 1e-6),
        f"rpr_batch ({len(rpr_poses)} poses)":
            lambda k: k.rpr_batch(RPR_DESIGN, rpr_poses, (math.pi / 2, 7 * math.pi / 6, 11 * math.pi / 6), 1.0),
        "bracket_sweep (5000 x 1000)": lambda k: k.bracket_sweep(rho, rewards, lowers, 1.5, 1e-12),
    }


def best_time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    both = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[both] - b[both]), initial=0.0))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the numpy backend is timed")
    print(f"{'kernel':<34}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}{'max |diff|':>12}")
    for name, job in workloads().items():
        tp, outp = best_time(lambda: job(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<34}{tp * 1e3:>12.2f}")
            continue
        tc, outc = best_time(lambda: job(_ckernels), args.repeat)
        print(f"{name:<34}{tp * 1e3:>12.2f}{tc * 1e3:>13.2f}{tp / tc:>8.1f}x{max_diff(outp, outc):>12.1e}")


if __name__ == "__main__":
    main()
