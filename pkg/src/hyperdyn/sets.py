"""Bit-indexed point sets over a Space.

On a finite discretization every subset is closed, so PointSet doubles as
the hyperspace element type; closure is the identity by construction.
"""

import numpy as np

from .errors import UsageError


class PointSet:
    __slots__ = ("space", "mask", "_hash")

    def __init__(self, space, mask):
        mask = np.ascontiguousarray(mask, dtype=bool)
        if mask.shape != (space.n,):
            raise UsageError(f"mask length {mask.shape} does not match space n={space.n}")
        mask.setflags(write=False)
        self.space = space
        self.mask = mask
        self._hash = None

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_indices(cls, space, indices):
        mask = np.zeros(space.n, dtype=bool)
        mask[np.asarray(indices, dtype=np.int64)] = True
        return cls(space, mask)

    @classmethod
    def singleton(cls, space, i):
        return cls.from_indices(space, [int(i)])

    @classmethod
    def full(cls, space):
        return cls(space, np.ones(space.n, dtype=bool))

    @classmethod
    def empty(cls, space):
        return cls(space, np.zeros(space.n, dtype=bool))

    # -- set algebra -----------------------------------------------------------

    def _check(self, other):
        if self.space is not other.space:
            raise UsageError("point sets live on different spaces")

    def union(self, other):
        self._check(other)
        return PointSet(self.space, self.mask | other.mask)

    def intersection(self, other):
        self._check(other)
        return PointSet(self.space, self.mask & other.mask)

    def difference(self, other):
        self._check(other)
        return PointSet(self.space, self.mask & ~other.mask)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other):
        self._check(other)
        return bool(np.all(other.mask[self.mask]))

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.space is other.space and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((id(self.space), self.mask.tobytes()))
        return self._hash

    def __contains__(self, i):
        return bool(self.mask[int(i)])

    # -- queries ----------------------------------------------------------------

    @property
    def cardinality(self):
        return int(np.count_nonzero(self.mask))

    @property
    def is_empty(self):
        return not self.mask.any()

    def indices(self):
        return np.flatnonzero(self.mask)

    def coords(self):
        return self.space.coords[self.mask]

    def __iter__(self):
        return iter(self.indices().tolist())

    def __len__(self):
        return self.cardinality

    def __repr__(self):
        ids = self.indices()
        shown = ids[:8].tolist()
        tail = "..." if ids.size > 8 else ""
        return f"PointSet({shown}{tail}, n={ids.size})"


def require_nonempty(pset, what="set"):
    if pset.is_empty:
        raise UsageError(f"{what} must be nonempty")
    return pset
