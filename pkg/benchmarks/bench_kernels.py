#!/usr/bin/env python3
"""Benchmark the compiled solver kernels against the pure-NumPy fallback.

Times full BCD and greedy sweeps on random Hermitian PSD matrices at several
problem sizes and prints sweeps/second for every available backend.

Usage:
    python benchmarks/bench_kernels.py [--sizes 33 65 129 257] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from priorcut._kernels import available_backends
from priorcut.core import make_rng


def random_problem(n: int, seed: int) -> np.ndarray:
    rng = make_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return np.ascontiguousarray(g @ g.conj().T / n)


def time_bcd(kernel, q: np.ndarray, sweeps: int) -> float:
    n = q.shape[0]
    u = np.eye(n, dtype=complex)
    order = np.arange(n, dtype=np.int64)
    start = time.perf_counter()
    for _ in range(sweeps):
        kernel.bcd_sweep(u, q, 1e-3, order)
    return time.perf_counter() - start


def time_greedy(kernel, q: np.ndarray, sweeps: int) -> float:
    n = q.shape[0]
    rng = make_rng(1)
    u = np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    order = np.arange(n, dtype=np.int64)
    start = time.perf_counter()
    for _ in range(sweeps):
        kernel.greedy_sweep(u, q, order)
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[33, 65, 129, 257])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions (best is reported)")
    parser.add_argument("--sweeps", type=int, default=20, help="sweeps per timing run")
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    header = f"{'kernel':<8} {'n':>5} " + "".join(f"{name:>14}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)

    for label, timer in (("bcd", time_bcd), ("greedy", time_greedy)):
        for n in args.sizes:
            q = random_problem(n, seed=n)
            rates = {}
            for name, kernel in backends.items():
                best = min(timer(kernel, q, args.sweeps) for _ in range(args.repeat))
                rates[name] = args.sweeps / best
            row = f"{label:<8} {n:>5} " + "".join(
                f"{rates[name]:>12.1f}/s" for name in backends)
            if "python" in rates and "cython" in rates:
                row += f"{rates['cython'] / rates['python']:>9.2f}x"
            print(row)


if __name__ == "__main__":
    main()
