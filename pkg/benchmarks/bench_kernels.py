"""Compare the compiled and pure-numpy RP-SWME kernels.

Usage: python3 benchmarks/bench_kernels.py [--games 200] [--n 10 30 50]

Both paths run in one process; the numpy fallback is selected per call with
``use_numba=False``.  The first compiled call (JIT warm-up) is excluded.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wagering import kernels


def _time(fn, repeat: int = 3) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_exact(N: int, games: int, rng: np.random.Generator, use_numba: bool) -> float:
    p1 = rng.random((games, N))
    w = np.ones((games, N))
    q1 = rng.random(games)

    def run():
        for k in range(games):
            kernels.rp_swme_exact_stats(p1[k], w[k], q1[k], use_numba=use_numba)

    return _time(run)


def bench_sample(N: int, games: int, rng: np.random.Generator, use_numba: bool) -> float:
    p1 = rng.random((games, N))
    w = np.ones((games, N))
    x = rng.integers(0, 2, games)
    u = rng.random((games, N))
    perm = np.argsort(rng.random((games, N)), axis=1)
    return _time(lambda: kernels.rp_swme_sample_batch(p1, w, x, u, perm, use_numba=use_numba))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--games", type=int, default=200)
    ap.add_argument("--n", type=int, nargs="+", default=[10, 30, 50])
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    if kernels.USE_NUMBA:
        kernels.rp_swme_exact_stats(np.array([0.2, 0.7, 0.4]), np.ones(3), 0.5)
        kernels.rp_swme_sample_batch(np.full((1, 3), 0.3), np.ones((1, 3)), np.zeros(1, int), np.zeros((1, 3)), np.arange(3)[None])
    else:
        print("numba unavailable or disabled; both columns use numpy")
    print(f"{'kernel':<8}{'N':>4}{'games':>8}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for N in args.n:
        for name, fn, games in (("exact", bench_exact, args.games), ("sample", bench_sample, 50 * args.games)):
            fast = fn(N, games, rng, True)
            slow = fn(N, games, rng, False)
            print(f"{name:<8}{N:>4}{games:>8}{fast:>12.4f}{slow:>12.4f}{slow / fast:>10.1f}")


if __name__ == "__main__":
    main()
