"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on the same inputs under both backends; the script checks
that the outputs are identical and prints the best wall time of each.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mrpr import _kernels_py

try:
    from mrpr import _ckernels
except ImportError:
    _ckernels = None


def _cases():
    rng = np.random.default_rng(0)
    y = rng.normal(size=200_000)
    tau = np.full_like(y, 0.01)
    inter = rng.exponential(2.0, 200_001)
    service = rng.exponential(1.0, 200_001)
    u = rng.random(2_000_000)

    def kalman(mod):
        out = [np.empty_like(y) for _ in range(5)]
        mod.kalman_sweep(y, tau, 0.0, 1.0, 0.01, 0.02, *out)
        return out[2]

    def mm1(mod):
        out = [np.empty(200_000) for _ in range(4)] + [np.empty(200_000, dtype=np.int64)]
        mod.mm1_fifo(inter, service, -1, 200_000, *out)
        return out[2]

    return [
        ("erlang_b(n=5000)", lambda m: m.erlang_b(5000, 4800.0)),
        ("trap_resolvent(C=5000)", lambda m: m.trap_resolvent(5000, 2500, 4000.0)),
        ("kalman_sweep(2e5)", kalman),
        ("mm1_fifo(2e5)", mm1),
        ("trap_trials(1e5)", lambda m: m.trap_trials(u, 2, 4, 1.0, 1.0, 100_000)),
    ]


def _best(fn, mod, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(mod)
        best = min(best, time.perf_counter() - t0)
    return best, result


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled backend not built; only the Python backend is available")
    print(f"{'kernel':<24} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}  identical")
    for name, fn in _cases():
        t_py, r_py = _best(fn, _kernels_py, args.repeat)
        if _ckernels is None:
            print(f"{name:<24} {t_py:>11.4f} {'-':>11} {'-':>8}  -")
            continue
        t_cy, r_cy = _best(fn, _ckernels, args.repeat)
        print(f"{name:<24} {t_py:>11.4f} {t_cy:>11.4f} {t_py / t_cy:>7.0f}x  {_same(r_py, r_cy)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
