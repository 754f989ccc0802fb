"""Timing comparison of the numba kernels against the pure-numpy fallback.

Run as:

    python benchmarks/bench_kernels.py

The backend is chosen at import time, so the numpy column is produced in a
subprocess with SPECTRALENS_NO_NUMBA=1.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

CASES = ("truncated_power_sum", "sff_abs2", "stieltjes_fixed_point")
REPEATS = 5


def _time_case(name: str) -> float:
    from spectralens import _kernels as k

    rng = np.random.default_rng(0)
    if name == "truncated_power_sum":
        s = np.arange(1, 2049) / 2048.0
        args = (s, 0.25, 2047)
        fn = k.truncated_power_sum
    elif name == "sff_abs2":
        levels = np.sort(rng.standard_normal(1500)) * 100.0
        taus = np.linspace(0.05, 3.0, 1200)
        args = (levels, taus)
        fn = k.sff_abs2
    else:
        z = np.linspace(0.3, 2.5, 400) + 1e-3j
        pop = 1.0 + rng.uniform(0.0, 2.0, 400)
        w = np.full(400, 1.0 / 400)
        g0 = -1.0 / z
        args = (z, 0.5, pop, w, g0, 0.5, 1e-10, 100_000)
        fn = k.stieltjes_fixed_point
    fn(*args)  # warm-up (JIT compilation for the numba path)
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    if len(sys.argv) > 1 and sys.argv[1] == "--worker":
        from spectralens import BACKEND

        print(json.dumps({"backend": BACKEND, "times": {c: _time_case(c) for c in CASES}}))
        return

    results = {}
    for no_numba in ("0", "1"):
        env = dict(os.environ, SPECTRALENS_NO_NUMBA=no_numba)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        results[payload["backend"]] = payload["times"]

    print(f"{'kernel':<24} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>9}")
    for case in CASES:
        tn = results.get("numba", {}).get(case)
        tp = results["numpy"][case]
        if tn is None:
            print(f"{case:<24} {'n/a':>12} {tp * 1e3:>12.3f} {'n/a':>9}")
        else:
            print(f"{case:<24} {tn * 1e3:>12.3f} {tp * 1e3:>12.3f} {tp / tn:>8.1f}x")


if __name__ == "__main__":
    main()
