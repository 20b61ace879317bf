"""The numba kernels and their numpy fallbacks must agree bit-for-bit."""

import numpy as np
import pytest

from hyperdyn import _kernels
from hyperdyn.space import GridSpec, build_space


@pytest.fixture(scope="module")
def plane():
    return build_space(GridSpec(lows=(-1.0, -1.0), highs=(1.0, 1.0), resolution=0.1))


@pytest.fixture(scope="module")
def torus():
    return build_space(
        GridSpec(lows=(0.0, 0.0), highs=(1.0, 1.0), resolution=0.1,
                 metric="torus", periods=(1.0, 1.0))
    )


def test_dilate_paths_agree_clip(plane):
    offs = plane.ball_offsets(0.25)
    rng = np.random.default_rng(0)
    for _ in range(10):
        mask = rng.random(plane.n) < 0.1
        fast = _kernels.dilate(mask, offs, plane.shape, False)
        slow = _kernels._dilate_clip_np(mask.reshape(plane.shape), offs, plane.shape).reshape(-1)
        assert np.array_equal(fast, slow)


def test_dilate_paths_agree_wrap(torus):
    offs = torus.ball_offsets(0.25)
    rng = np.random.default_rng(1)
    for _ in range(10):
        mask = rng.random(torus.n) < 0.1
        fast = _kernels.dilate(mask, offs, torus.shape, True)
        slow = _kernels._dilate_wrap_np(mask.reshape(torus.shape), offs, torus.shape).reshape(-1)
        assert np.array_equal(fast, slow)


def test_dilate_is_metric_ball(plane):
    # dilation of a singleton is exactly the open metric ball
    offs = plane.ball_offsets(0.35)
    center = plane.snap((0.0, 0.0))
    mask = np.zeros(plane.n, dtype=bool)
    mask[center] = True
    out = _kernels.dilate(mask, offs, plane.shape, False)
    ball = plane.distances_from(center) < 0.35
    assert np.array_equal(out, ball)


def test_minmax_table_matches_loop():
    rng = np.random.default_rng(2)
    pts = rng.random((40, 2))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    ii = rng.integers(0, 40, size=60)
    jj = rng.integers(0, 40, size=60)
    fast = _kernels.minmax_center_table(d, ii, jj)
    slow = _kernels._minmax_table_np(d, np.asarray(ii), np.asarray(jj))
    naive = np.array([np.maximum(d[:, i], d[:, j]).min() for i, j in zip(ii, jj)])
    assert np.array_equal(fast, slow)
    assert np.array_equal(fast, naive)


def test_minmax_grid_matches_table(plane):
    rng = np.random.default_rng(3)
    ii = rng.integers(0, plane.n, size=80)
    jj = rng.integers(0, plane.n, size=80)
    grid_vals = _kernels.minmax_center_grid(
        plane.cells_of(ii), plane.cells_of(jj), plane.shape, plane.resolution
    )
    d = plane.dist_table()
    table_vals = _kernels.minmax_center_table(d, ii, jj)
    assert np.allclose(grid_vals, table_vals, rtol=0, atol=1e-12)


def test_numba_flag_reporting():
    assert isinstance(_kernels.using_numba(), bool)
