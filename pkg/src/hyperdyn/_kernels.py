"""Hot numeric kernels: lattice ball-dilation and min-max center scans.

Each kernel has two interchangeable implementations: an ``@njit`` one and a
pure-numpy one.  The numpy path is selected when the environment variable
``HYPERDYN_NO_NUMBA`` is set (or numba is unavailable).  Both paths perform
the same comparisons in the same order on the same floats, so results are
bit-identical; ``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

import numpy as np

_DISABLED = os.environ.get("HYPERDYN_NO_NUMBA", "").lower() in ("1", "true", "yes")

if not _DISABLED:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False


def using_numba():
    return _HAVE_NUMBA


# ---------------------------------------------------------------------------
# lattice dilation: out = {cell + off : cell in mask, off in offsets}
# clip variant drops out-of-range cells, wrap variant reduces them modulo
# the axis length.  Dilating twice by the offsets of an open eps-ball gives
# the covering star of a set at that level.
# ---------------------------------------------------------------------------


def _dilate_clip_np(mask, offsets, shape):
    nd = mask.ndim
    out = np.zeros_like(mask)
    for off in offsets:
        src = []
        dst = []
        for a in range(nd):
            o = int(off[a])
            n = shape[a]
            if o >= n or o <= -n:
                break
            if o >= 0:
                src.append(slice(0, n - o))
                dst.append(slice(o, n))
            else:
                src.append(slice(-o, n))
                dst.append(slice(0, n + o))
        else:
            out[tuple(dst)] |= mask[tuple(src)]
    return out


def _dilate_wrap_np(mask, offsets, shape):
    out = np.zeros_like(mask)
    for off in offsets:
        out |= np.roll(mask, tuple(int(o) for o in off), axis=tuple(range(mask.ndim)))
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _dilate_clip_1d(mask, offs, n0):
        out = np.zeros(n0, dtype=np.bool_)
        for p in range(n0):
            if mask[p]:
                for k in range(offs.shape[0]):
                    q = p + offs[k, 0]
                    if 0 <= q < n0:
                        out[q] = True
        return out

    @njit(cache=True)
    def _dilate_wrap_1d(mask, offs, n0):
        out = np.zeros(n0, dtype=np.bool_)
        for p in range(n0):
            if mask[p]:
                for k in range(offs.shape[0]):
                    out[(p + offs[k, 0]) % n0] = True
        return out

    @njit(cache=True)
    def _dilate_clip_2d(mask, offs, n0, n1):
        out = np.zeros(n0 * n1, dtype=np.bool_)
        for p in range(n0 * n1):
            if mask[p]:
                i0 = p // n1
                i1 = p - i0 * n1
                for k in range(offs.shape[0]):
                    j0 = i0 + offs[k, 0]
                    j1 = i1 + offs[k, 1]
                    if 0 <= j0 < n0 and 0 <= j1 < n1:
                        out[j0 * n1 + j1] = True
        return out

    @njit(cache=True)
    def _dilate_wrap_2d(mask, offs, n0, n1):
        out = np.zeros(n0 * n1, dtype=np.bool_)
        for p in range(n0 * n1):
            if mask[p]:
                i0 = p // n1
                i1 = p - i0 * n1
                for k in range(offs.shape[0]):
                    j0 = (i0 + offs[k, 0]) % n0
                    j1 = (i1 + offs[k, 1]) % n1
                    out[j0 * n1 + j1] = True
        return out


def dilate(mask_flat, offsets, shape, wrap):
    """Dilate a flat boolean mask over a row-major lattice of `shape`.

    offsets: (m, d) int64 offset vectors. wrap: apply per-axis modulo
    (all axes) instead of clipping at the boundary.
    """
    shape = tuple(int(s) for s in shape)
    nd = len(shape)
    if _HAVE_NUMBA and nd == 1:
        f = _dilate_wrap_1d if wrap else _dilate_clip_1d
        return f(mask_flat, offsets, shape[0])
    if _HAVE_NUMBA and nd == 2:
        f = _dilate_wrap_2d if wrap else _dilate_clip_2d
        return f(mask_flat, offsets, shape[0], shape[1])
    cube = mask_flat.reshape(shape)
    f = _dilate_wrap_np if wrap else _dilate_clip_np
    return f(cube, offsets, shape).reshape(-1)


# ---------------------------------------------------------------------------
# min-max center scan: for a point pair (i, j), the smallest radius at which
# some lattice center reaches both, min_z max(d(z,i), d(z,j)).  Candidates
# with either distance above d(i,j) cannot improve on z = i, so they are
# skipped; the scan stays exact.
# ---------------------------------------------------------------------------


def _minmax_table_np(dist, ii, jj):
    out = np.empty(ii.size, dtype=np.float64)
    n = dist.shape[0]
    step = max(1, int(4_000_000 // max(n, 1)))
    for s in range(0, ii.size, step):
        i = ii[s : s + step]
        j = jj[s : s + step]
        m = np.maximum(dist[:, i], dist[:, j])
        out[s : s + step] = m.min(axis=0)
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _minmax_table_nb(dist, ii, jj):
        out = np.empty(ii.size, dtype=np.float64)
        n = dist.shape[0]
        for k in range(ii.size):
            i = ii[k]
            j = jj[k]
            dij = dist[i, j]
            best = dij
            for z in range(n):
                a = dist[z, i]
                if a > dij:
                    continue
                b = dist[z, j]
                if b > dij:
                    continue
                m = a if a > b else b
                if m < best:
                    best = m
            out[k] = best
        return out


def minmax_center_table(dist, ii, jj):
    """Per-pair min_z max(d(z,i), d(z,j)) from a full distance matrix."""
    ii = np.ascontiguousarray(ii, dtype=np.int64)
    jj = np.ascontiguousarray(jj, dtype=np.int64)
    if _HAVE_NUMBA:
        return _minmax_table_nb(dist, ii, jj)
    return _minmax_table_np(dist, ii, jj)


def _minmax_grid_np(cells_i, cells_j, shape, h):
    nd = len(shape)
    axes = [np.arange(s, dtype=np.int64) for s in shape]
    out = np.empty(cells_i.shape[0], dtype=np.float64)
    for k in range(cells_i.shape[0]):
        ci = cells_i[k]
        cj = cells_j[k]
        dij = h * float(np.sqrt(np.sum((ci.astype(np.float64) - cj) ** 2)))
        r = int(dij / h) + 1
        ranges = []
        for a in range(nd):
            lo = max(0, max(ci[a], cj[a]) - r)
            hi = min(shape[a] - 1, min(ci[a], cj[a]) + r)
            ranges.append(axes[a][lo : hi + 1])
        grids = np.meshgrid(*ranges, indexing="ij")
        zs = np.stack([g.reshape(-1) for g in grids], axis=1).astype(np.float64)
        da = h * np.sqrt(np.sum((zs - ci) ** 2, axis=1))
        db = h * np.sqrt(np.sum((zs - cj) ** 2, axis=1))
        m = np.maximum(da, db)
        m = m[(da <= dij) & (db <= dij)]
        out[k] = min(dij, m.min()) if m.size else dij
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _minmax_grid_nb_2d(cells_i, cells_j, n0, n1, h):
        out = np.empty(cells_i.shape[0], dtype=np.float64)
        for k in range(cells_i.shape[0]):
            i0 = cells_i[k, 0]
            i1 = cells_i[k, 1]
            j0 = cells_j[k, 0]
            j1 = cells_j[k, 1]
            dij = h * np.sqrt(float((i0 - j0) ** 2 + (i1 - j1) ** 2))
            r = int(dij / h) + 1
            lo0 = max(0, max(i0, j0) - r)
            hi0 = min(n0 - 1, min(i0, j0) + r)
            lo1 = max(0, max(i1, j1) - r)
            hi1 = min(n1 - 1, min(i1, j1) + r)
            best = dij
            for z0 in range(lo0, hi0 + 1):
                for z1 in range(lo1, hi1 + 1):
                    a = h * np.sqrt(float((z0 - i0) ** 2 + (z1 - i1) ** 2))
                    if a > dij:
                        continue
                    b = h * np.sqrt(float((z0 - j0) ** 2 + (z1 - j1) ** 2))
                    if b > dij:
                        continue
                    m = a if a > b else b
                    if m < best:
                        best = m
            out[k] = best
        return out

    @njit(cache=True)
    def _minmax_grid_nb_1d(cells_i, cells_j, n0, h):
        out = np.empty(cells_i.shape[0], dtype=np.float64)
        for k in range(cells_i.shape[0]):
            i0 = cells_i[k, 0]
            j0 = cells_j[k, 0]
            dij = h * abs(float(i0 - j0))
            r = int(dij / h) + 1
            lo0 = max(0, max(i0, j0) - r)
            hi0 = min(n0 - 1, min(i0, j0) + r)
            best = dij
            for z0 in range(lo0, hi0 + 1):
                a = h * abs(float(z0 - i0))
                if a > dij:
                    continue
                b = h * abs(float(z0 - j0))
                if b > dij:
                    continue
                m = a if a > b else b
                if m < best:
                    best = m
            out[k] = best
        return out


def minmax_center_grid(cells_i, cells_j, shape, h):
    """Per-pair min-max center radius on a Euclidean lattice, by box scan.

    cells_i, cells_j: (k, d) integer cell coordinates of each pair.
    """
    cells_i = np.ascontiguousarray(cells_i, dtype=np.int64)
    cells_j = np.ascontiguousarray(cells_j, dtype=np.int64)
    if _HAVE_NUMBA and len(shape) == 2:
        return _minmax_grid_nb_2d(cells_i, cells_j, int(shape[0]), int(shape[1]), float(h))
    if _HAVE_NUMBA and len(shape) == 1:
        return _minmax_grid_nb_1d(cells_i, cells_j, int(shape[0]), float(h))
    return _minmax_grid_np(cells_i, cells_j, tuple(shape), float(h))
