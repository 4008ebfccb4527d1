"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from distillbound import _kernels_py

try:
    from distillbound import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    pts = rng.random((4096, 2))
    anchors = rng.random((1000, 2))
    A = rng.standard_normal((20, 50))
    B = rng.standard_normal((30, 50))
    draws = 32
    k = 25
    idx = rng.integers(0, 50, size=(draws, k))
    coef = rng.random((draws, k))
    target = A @ B.T
    W = rng.standard_normal((256, 64))
    v0 = rng.standard_normal(64)
    return {
        "kde_log_density 4096x1000": lambda mod: mod.kde_log_density(pts, anchors, 0.1),
        "outer_residual_norms 32 draws": lambda mod: mod.outer_residual_norms(target, A, B, idx, idx, coef),
        "power_iteration 256x64": lambda mod: mod.power_iteration(W, v0, 1e-9, 10000),
        "power_iteration 20x50": lambda mod: mod.power_iteration(A, B[0], 1e-9, 10000),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:34s} {t_py:10.2f} {'n/a':>12s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {t_py:10.2f} {t_c:12.2f} {t_py / t_c:8.2f}x")


if __name__ == "__main__":
    main()
