"""Time the numba kernels against their numpy twins on Missouri-sized inputs.

    python benchmarks/bench_kernels.py            # kernel-level comparison
    python benchmarks/bench_kernels.py --end-to-end

``--end-to-end`` also runs the full default pipeline in two subprocesses,
one with POSTDEV_NUMBA=0, and reports their wall times.
"""

import argparse
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

from postdev import kernels
from postdev._accel import NUMBA_ENABLED
from postdev.dataset import missouri
from postdev.models import meansd_to_ab_arrays
from postdev.numerics import gauss_hermite_normalized, rng_stream


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    data = missouri()
    r, n = np.ascontiguousarray(data.r), np.ascontiguousarray(data.n)
    rule = gauss_hermite_normalized(20)
    z, logw = np.ascontiguousarray(rule.nodes), np.ascontiguousarray(rule.log_weights)
    rng = rng_stream(0)
    mu = rng.uniform(-5.1, -4.4, 10_000)
    sigma = rng.uniform(0.07, 0.6, 10_000)
    a, b = meansd_to_ab_arrays(rng.uniform(0.0066, 0.012, 10_000), rng.uniform(0.0007, 0.006, 10_000))
    p = rng.uniform(1e-4, 0.05, (10_000, data.m))
    x = rng.normal(-4.8, 0.3, 10_000)
    grid = np.linspace(-6.5, -3.0, 512)
    return {
        "normal-logit grid (10^4 x 84 x 20)": ("normal_logit_grid", (mu, sigma, r, n, z, logw)),
        "beta-binomial grid (10^4 x 84)": ("beta_binomial_grid", (a, b, r, n)),
        "binomial rows (10^4 x 84)": ("binomial_rows", (p, r, n)),
        "gaussian kde (10^4 samples, 512 points)": ("gaussian_kde", (x, grid, 0.05)),
    }


def kernel_table(repeat):
    print(f"numba enabled: {NUMBA_ENABLED}")
    print(f"{'kernel':42s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for label, (name, args) in cases().items():
        fast = getattr(kernels, name + "_nb")
        slow = getattr(kernels, name + "_np")
        if NUMBA_ENABLED:
            fast(*args)  # compile outside the timing
            t_nb = best_of(lambda: fast(*args), repeat)
        else:
            t_nb = float("nan")
        t_np = best_of(lambda: slow(*args), repeat)
        assert np.allclose(fast(*args), slow(*args), rtol=1e-9, atol=1e-8) if NUMBA_ENABLED else True
        print(f"{label:42s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}x")


def end_to_end():
    for flag in ("1", "0"):
        env = dict(os.environ, POSTDEV_NUMBA=flag)
        with tempfile.TemporaryDirectory() as out:
            t0 = time.perf_counter()
            subprocess.run([sys.executable, "-m", "postdev", "run", "--out", out], env=env, check=True)
            print(f"full pipeline, POSTDEV_NUMBA={flag}: {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    kernel_table(args.repeat)
    if args.end_to_end:
        end_to_end()
