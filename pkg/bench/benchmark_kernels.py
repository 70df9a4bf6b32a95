"""Compare the compiled kernel lane against the pure-Python fallback.

Times ball BFS enumeration and union-find component labeling on identical
inputs.  Run as: python bench/benchmark_kernels.py
"""

from __future__ import annotations

import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_current_lane():
    from nilpercolate import _kernels, builtin_spec
    from nilpercolate.balls import enumerate_ball

    heis = builtin_spec("heisenberg3")
    z2 = builtin_spec("z2")

    print(f"kernel lane: {_kernels.BACKEND}")

    for name, spec, r in (("heisenberg3", heis, 16), ("z2", z2, 200)):
        t = _time(lambda: enumerate_ball(spec, r))
        n = enumerate_ball(spec, r).beta(r)
        print(f"  ball BFS {name:12s} r={r:<4d} ({n:>9d} pts): {t * 1e3:9.2f} ms")

    rng = np.random.default_rng(0)
    n = 500_000
    u = rng.integers(0, n, size=2 * n).astype(np.int64)
    v = rng.integers(0, n, size=2 * n).astype(np.int64)
    t = _time(lambda: _kernels.components(n, u, v))
    print(f"  union-find n={n}, m={2 * n}: {t * 1e3:9.2f} ms")


def main():
    if os.environ.get("_NILPERC_BENCH_CHILD"):
        bench_current_lane()
        return
    bench_current_lane()
    # re-run in a subprocess with the pure-Python lane forced
    env = dict(os.environ, NILPERC_PURE="1", _NILPERC_BENCH_CHILD="1")
    subprocess.run([sys.executable, os.path.abspath(__file__)], env=env, check=True)


if __name__ == "__main__":
    main()
