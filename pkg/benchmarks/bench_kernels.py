"""Benchmark the hot kernels: numba-compiled default vs the fallback path.

The path simulator compares the compiled scalar loop against the vectorized
numpy implementation in-process; the phase integrator's fallback is the
uncompiled loop, timed in a subprocess with CUTOFFLAB_NO_NUMBA=1 so that the
helpers are genuinely uncompiled.  Usage: python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

from cutofflab import _kernels

EM_PATHS = 20_000
EM_STEPS = 2_000
PHASE_HORIZON = 2_000.0


def _em_inputs():
    rng = np.random.default_rng(42)
    x0 = rng.normal(2.0, 0.3, EM_PATHS)
    noise = rng.standard_normal((EM_PATHS, EM_STEPS))
    obs = np.array([EM_STEPS // 2, EM_STEPS], dtype=np.int64)
    return x0, noise, obs


def time_em(kernel, repeats=3) -> float:
    x0, noise, obs = _em_inputs()
    out = np.empty((obs.size, EM_PATHS))
    kernel(x0, noise, 1e-3, 0.5, 0.03, obs, out)  # warmup / compile
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        kernel(x0, noise, 1e-3, 0.5, 0.03, obs, out)
        best = min(best, time.perf_counter() - start)
    return best


def _phase_args():
    return (
        np.array([1.0]), np.array([0.5]), np.array([0.8]), np.array([0.0]),
        4.0, 0.3, PHASE_HORIZON, 1e-3, PHASE_HORIZON, 0,
        np.empty(1), np.empty(1), np.empty(1), 0.0, 1.0,
    )


def time_phase(kernel, repeats=3) -> float:
    args = _phase_args()
    kernel(*args)  # warmup / compile
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        kernel(*args)
        best = min(best, time.perf_counter() - start)
    return best


def fallback_phase_time() -> float:
    """Time the pure loop in a clean interpreter with numba disabled."""
    script = (
        "import json, sys; sys.path.insert(0, '.');"
        "from benchmarks.bench_kernels import time_phase;"
        "from cutofflab import _kernels;"
        "print(json.dumps(time_phase(_kernels.phase_rk4, repeats=1)))"
    )
    env = dict(os.environ, CUTOFFLAB_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", script], capture_output=True, text=True, env=env, check=True
    )
    return float(json.loads(out.stdout.strip().splitlines()[-1]))


def main() -> None:
    print(f"numba enabled: {_kernels.USING_NUMBA}")
    print(f"path simulator: {EM_PATHS} paths x {EM_STEPS} steps")
    t_sel = time_em(_kernels.em_paths)
    t_np = time_em(_kernels.em_paths_numpy)
    print(f"  selected backend: {1e3 * t_sel:8.1f} ms")
    print(f"  numpy fallback:   {1e3 * t_np:8.1f} ms   ({t_np / t_sel:5.1f}x vs selected)")

    print(f"phase integrator: horizon {PHASE_HORIZON:g}")
    t_phase = time_phase(_kernels.phase_rk4)
    print(f"  selected backend: {1e3 * t_phase:8.1f} ms")
    if _kernels.USING_NUMBA:
        t_pure = fallback_phase_time()
        print(
            f"  pure-python fallback (subprocess): {1e3 * t_pure:8.1f} ms   "
            f"({t_pure / t_phase:5.1f}x vs selected)"
        )

    # both backends must agree on the results they produce (up to 1-ulp
    # differences of the vectorized power function)
    x0, noise, obs = _em_inputs()
    out_a = np.empty((obs.size, EM_PATHS))
    out_b = np.empty((obs.size, EM_PATHS))
    _kernels.em_paths(x0, noise, 1e-3, 0.5, 0.03, obs, out_a)
    _kernels.em_paths_numpy(x0, noise, 1e-3, 0.5, 0.03, obs, out_b)
    dev = np.max(np.abs(out_a - out_b) / np.maximum(np.abs(out_a), 1e-30))
    print(f"max relative backend deviation: {dev:.2e}")


if __name__ == "__main__":
    main()
