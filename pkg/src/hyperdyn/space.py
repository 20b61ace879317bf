"""Discretized phase spaces: lattice builders, metrics, and point snapping.

A Space is an indexed finite point set with a symmetric positive metric.
Grid-built spaces keep their lattice structure so that ball dilations and
center scans can run on cell indices instead of a full distance matrix.
"""

import itertools
import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError, UsageError

DEFAULT_MAX_POINTS = 200_000
_TABLE_CACHE_MAX = 4_000  # largest n for which a full distance matrix is kept


def _max_points():
    raw = os.environ.get("HYPERDYN_MAX_POINTS", "")
    if raw:
        try:
            return int(raw)
        except ValueError as exc:
            raise UsageError(f"HYPERDYN_MAX_POINTS is not an integer: {raw!r}") from exc
    return DEFAULT_MAX_POINTS


@dataclass(frozen=True)
class GridSpec:
    """Declarative description of a lattice phase space.

    metric is one of "euclidean", "torus", "circle".  For "torus" the
    bounds [low, low+period) are sampled at spacing h along each axis; for
    "circle" the single axis is an arc of the given circumference.
    """

    lows: tuple
    highs: tuple
    resolution: float
    metric: str = "euclidean"
    periods: tuple = None

    @property
    def dimension(self):
        return len(self.lows)


class Space:
    """Finite metric space with optional lattice structure.

    Immutable after construction; all arrays are read-only views.
    """

    def __init__(self, coords, kind, shape=None, lows=None, resolution=None,
                 periods=None, table=None):
        coords = np.ascontiguousarray(coords, dtype=np.float64)
        coords.setflags(write=False)
        self.coords = coords
        self.kind = kind
        self.shape = tuple(int(s) for s in shape) if shape is not None else None
        self.lows = tuple(float(v) for v in lows) if lows is not None else None
        self.resolution = float(resolution) if resolution is not None else None
        self.periods = tuple(float(p) for p in periods) if periods is not None else None
        if table is not None:
            table = np.ascontiguousarray(table, dtype=np.float64)
            table.setflags(write=False)
        self._table = table
        self._min_spacing = None

    # -- basic geometry ----------------------------------------------------

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def is_grid(self):
        return self.shape is not None

    def _axis_deltas(self, a, b):
        d = np.abs(a - b)
        if self.periods is not None:
            per = np.asarray(self.periods)
            d = np.minimum(d, per - d)
        return d

    def distance(self, i, j):
        if self.kind == "table":
            return float(self._table[i, j])
        d = self._axis_deltas(self.coords[i], self.coords[j])
        return float(np.sqrt(np.sum(d * d)))

    def distances_from(self, i):
        """Distances from point i to every point, as a vector."""
        if self.kind == "table":
            return self._table[i]
        d = self._axis_deltas(self.coords, self.coords[i])
        return np.sqrt(np.sum(d * d, axis=1))

    def dist_table(self):
        """Full pairwise distance matrix; cached, only for small spaces."""
        if self._table is not None:
            return self._table
        if self.n > _TABLE_CACHE_MAX:
            raise ResourceError(
                f"distance matrix for n={self.n} exceeds the cache cap "
                f"({_TABLE_CACHE_MAX}); use lattice operations instead"
            )
        rows = np.stack([self.distances_from(i) for i in range(self.n)])
        rows.setflags(write=False)
        self._table = rows
        return rows

    def min_spacing(self):
        if self._min_spacing is None:
            if self.is_grid:
                self._min_spacing = self.resolution
            else:
                t = self.dist_table()
                off = t[~np.eye(self.n, dtype=bool)]
                self._min_spacing = float(off.min()) if off.size else float("inf")
        return self._min_spacing

    # -- lattice helpers ----------------------------------------------------

    def cell_of(self, idx):
        """Multi-index of a flat point index (row-major)."""
        return np.unravel_index(idx, self.shape)

    def cells_of(self, idx_array):
        cells = np.unravel_index(np.asarray(idx_array, dtype=np.int64), self.shape)
        return np.stack(cells, axis=-1)

    def ball_offsets(self, eps):
        """Integer offset vectors with metric norm strictly below eps.

        These are the cells an open eps-ball reaches from its center; used
        by covering-star dilations.  For periodic axes, offsets are reduced
        to unique residues.
        """
        if not self.is_grid:
            raise UsageError("ball_offsets requires a grid-built space")
        h = self.resolution
        r = int(np.ceil(eps / h)) + 1
        nd = len(self.shape)
        per_axis = []
        for a in range(nd):
            lim = min(r, self.shape[a] - 1)
            per_axis.append(range(-lim, lim + 1))
        offs = []
        seen = set()
        per = self.periods
        for vec in itertools.product(*per_axis):
            d2 = 0.0
            for a in range(nd):
                da = abs(vec[a]) * h
                if per is not None:
                    da = min(da, per[a] - da)
                d2 += da * da
            if np.sqrt(d2) < eps:
                if per is not None:
                    key = tuple(vec[a] % self.shape[a] for a in range(nd))
                else:
                    key = vec
                if key not in seen:
                    seen.add(key)
                    offs.append(vec)
        return np.array(sorted(offs), dtype=np.int64).reshape(len(offs), nd)

    # -- snapping ------------------------------------------------------------

    def snap_many(self, pts, clamp=False):
        """Vectorized snap of an (m, d) coordinate array to point indices.

        Midpoints round toward the lower index.  Periodic axes wrap; on
        non-periodic axes out-of-bound coordinates raise DomainError unless
        clamp is set.
        """
        if not self.is_grid:
            raise UsageError("snap requires a grid-built space")
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        nd = len(self.shape)
        idx = np.zeros(pts.shape[0], dtype=np.int64)
        for a in range(nd):
            x = pts[:, a]
            lo = self.lows[a]
            h = self.resolution
            if self.periods is not None:
                x = lo + np.mod(x - lo, self.periods[a])
            elif clamp:
                hi = lo + (self.shape[a] - 1) * h
                x = np.clip(x, lo, hi)
            else:
                hi = lo + (self.shape[a] - 1) * h
                bad = (x < lo) | (x > hi)
                if bad.any():
                    b = int(np.argmax(bad))
                    raise DomainError(
                        f"coordinate {pts[b].tolist()} outside axis {a} bounds "
                        f"[{lo}, {hi}]",
                        coords=pts[b].tolist(),
                    )
            q = (x - lo) / h
            k = np.floor(q + 0.5)
            exact_half = (q + 0.5) == k
            k = k.astype(np.int64)
            k[exact_half] -= 1
            if self.periods is not None:
                k = np.mod(k, self.shape[a])
            else:
                k = np.clip(k, 0, self.shape[a] - 1)
            idx = idx * self.shape[a] + k
        return idx

    def snap(self, coords, clamp=False):
        return int(self.snap_many(np.asarray(coords, dtype=np.float64)[None, :], clamp=clamp)[0])


def build_space(spec: GridSpec) -> Space:
    """Materialize the lattice described by a GridSpec, row-major by axis."""
    nd = spec.dimension
    if len(spec.highs) != nd:
        raise UsageError("lows and highs must have equal length")
    h = float(spec.resolution)
    if h <= 0:
        raise UsageError("resolution must be positive")
    metric = spec.metric
    if metric not in ("euclidean", "torus", "circle"):
        raise UsageError(f"unknown metric kind {metric!r}")
    if metric == "circle" and nd != 1:
        raise UsageError("circle metric is one-dimensional")

    periods = None
    axes = []
    if metric in ("torus", "circle"):
        if metric == "circle":
            periods = (float(spec.highs[0] - spec.lows[0]),) if spec.periods is None else tuple(spec.periods)
        else:
            if spec.periods is None:
                raise UsageError("torus metric requires periods")
            periods = tuple(float(p) for p in spec.periods)
        shape = []
        for a in range(nd):
            na = int(round(periods[a] / h))
            if na < 1 or abs(na * h - periods[a]) > 1e-9 * max(1.0, periods[a]):
                raise UsageError(f"period on axis {a} is not a multiple of h")
            shape.append(na)
            axes.append(spec.lows[a] + h * np.arange(na))
    else:
        shape = []
        for a in range(nd):
            span = spec.highs[a] - spec.lows[a]
            na = int(round(span / h)) + 1
            if na < 1 or abs((na - 1) * h - span) > 1e-9 * max(1.0, abs(span)):
                raise UsageError(f"bounds on axis {a} are not h-aligned")
            shape.append(na)
            axes.append(spec.lows[a] + h * np.arange(na))

    count = int(np.prod(shape))
    cap = _max_points()
    if count > cap:
        raise ResourceError(f"grid would have {count} points, above the cap {cap}")

    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.reshape(-1) for g in grids], axis=1)
    return Space(
        coords,
        kind="torus" if periods is not None else "euclidean",
        shape=shape,
        lows=spec.lows,
        resolution=h,
        periods=periods,
    )


def space_from_table(table, coords=None) -> Space:
    """Space defined by an explicit distance matrix (word metrics etc.)."""
    table = np.asarray(table, dtype=np.float64)
    n = table.shape[0]
    if table.shape != (n, n):
        raise UsageError("distance table must be square")
    if not np.allclose(table, table.T, atol=0.0, rtol=0.0, equal_nan=False):
        raise UsageError("distance table must be symmetric")
    if np.any(np.diag(table) != 0.0):
        raise UsageError("distance table diagonal must be zero")
    off = table[~np.eye(n, dtype=bool)]
    if off.size and off.min() <= 0.0:
        raise UsageError("distinct points must have positive distance")
    if coords is None:
        coords = np.arange(n, dtype=np.float64)[:, None]
    return Space(coords, kind="table", table=table)
