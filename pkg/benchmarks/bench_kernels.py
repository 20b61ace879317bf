"""Timing comparison of the numba kernels against their numpy fallbacks.

Run twice to compare paths:

    python3 benchmarks/bench_kernels.py
    HYPERDYN_NO_NUMBA=1 python3 benchmarks/bench_kernels.py

Both paths produce bit-identical outputs; only the wall time differs.
"""

import time

import numpy as np

from hyperdyn import _kernels
from hyperdyn.space import GridSpec, build_space


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_dilate():
    space = build_space(GridSpec(lows=(-2.0, -2.0), highs=(2.0, 2.0), resolution=0.05))
    offs = space.ball_offsets(0.4)
    rng = np.random.default_rng(0)
    mask = np.zeros(space.n, dtype=bool)
    mask[rng.choice(space.n, size=400, replace=False)] = True
    t, out = timeit(lambda: _kernels.dilate(mask, offs, space.shape, False))
    return t, int(out.sum())


def bench_minmax_table():
    n = 360
    idx = np.arange(n, dtype=float)
    d = np.abs(idx[:, None] - idx[None, :])
    d = np.minimum(d, n - d)
    ii, jj = np.divmod(np.arange(n * 40), n)
    t, out = timeit(lambda: _kernels.minmax_center_table(d, ii, jj), repeat=3)
    return t, float(out.sum())


def bench_minmax_grid():
    space = build_space(GridSpec(lows=(-2.0, -2.0), highs=(2.0, 2.0), resolution=0.05))
    rng = np.random.default_rng(1)
    ii = rng.integers(0, space.n, size=2000)
    jj = rng.integers(0, space.n, size=2000)
    ci = space.cells_of(ii)
    cj = space.cells_of(jj)
    t, out = timeit(
        lambda: _kernels.minmax_center_grid(ci, cj, space.shape, 0.05), repeat=3
    )
    return t, float(out.sum())


def main():
    mode = "numba" if _kernels.using_numba() else "numpy-fallback"
    print(f"kernel path: {mode}")
    for name, fn in (
        ("ball dilation 81x81 grid, eps=0.4", bench_dilate),
        ("min-max center scan, 360-point circle table", bench_minmax_table),
        ("min-max center scan, planar grid box scan", bench_minmax_grid),
    ):
        t, checksum = fn()
        print(f"{name:48s} {t * 1e3:9.2f} ms   (checksum {checksum})")


if __name__ == "__main__":
    main()
