"""Throughput comparison of the stepping kernel backends.

Runs the affine (Ornstein-Uhlenbeck) and square-root (Cox-Ingersoll-Ross)
steppers over identical pre-drawn shocks on every available backend and
prints steps/second plus the native-over-python speedup.

Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import numpy as np

from longrun_npc.kernels import available_backends


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=1_000_000)
    args = parser.parse_args()

    backends = available_backends()
    rng = np.random.default_rng(0)
    shocks = rng.standard_normal((args.steps, 1))
    amat = np.array([[-1.0]])
    bvec = np.zeros(1)
    chol = np.sqrt(2.0) * np.eye(1)

    cases = {
        "affine(ou)": lambda impl: impl.em_affine(
            [0.3], amat, bvec, chol, 1e-3, shocks, 10),
        "cir": lambda impl: impl.em_cir(
            [1.0], 1.0, 1.0, 1.0, 1e-12, 1e-3, shocks, 10),
    }

    print(f"{args.steps:,} steps per run, best of 3")
    print(f"{'kernel':<12} {'backend':<8} {'seconds':>10} {'steps/s':>14}")
    results = {}
    for case, runner in cases.items():
        for name, impl in backends.items():
            secs = _time(lambda: runner(impl))
            results[(case, name)] = secs
            print(f"{case:<12} {name:<8} {secs:>10.4f} {args.steps / secs:>14,.0f}")
    for case in cases:
        if ("native" in backends) and (case, "python") in results:
            speedup = results[(case, "python")] / results[(case, "native")]
            print(f"{case}: native speedup {speedup:.0f}x")

    # equality of recorded states across backends on the same shocks
    if "native" in backends:
        for case, runner in cases.items():
            a, _ = runner(backends["python"])
            b, _ = runner(backends["native"])
            print(f"{case}: max |python - native| = {np.abs(a - b).max():.3e}")


if __name__ == "__main__":
    main()
