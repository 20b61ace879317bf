"""Sampled semigroup actions and their orbital / limit operators.

An action is a finite list of point maps with a descending filter chain of
element subsets.  Orbit closures, limit sets, prolongations and stability
verdicts are computed exactly on the sample; wherever a verdict depends on
elements outside the sample it carries an approximation flag.

Closure is the identity on a finite space; operators that close orbits in
the continuum just collect image points here.
"""

from dataclasses import dataclass, field

import numpy as np

from .coverings import ConvergenceDiagnostic, converges_to_O
from .errors import UsageError
from .hyperspace import NoncompactnessProfile, noncompactness, rho_H
from .sets import PointSet, require_nonempty

_ELEMENT_CHUNK = 4096


class TableAction:
    """Element maps stored as a full (n_elements, n_points) index table."""

    def __init__(self, table):
        table = np.ascontiguousarray(table, dtype=np.int64)
        table.setflags(write=False)
        self.table = table

    @property
    def n_elements(self):
        return self.table.shape[0]

    def element_images(self, element_ids, point_ids):
        return self.table[np.ix_(np.asarray(element_ids), np.asarray(point_ids))]

    def image_mask(self, element_ids, point_mask):
        pts = np.flatnonzero(point_mask)
        out = np.zeros(point_mask.size, dtype=bool)
        for s in range(0, len(element_ids), _ELEMENT_CHUNK):
            img = self.table[np.ix_(element_ids[s : s + _ELEMENT_CHUNK], pts)]
            out[img.ravel()] = True
        return out


class MatrixAction:
    """Linear planar maps, one 2x2 matrix per element, snapped at the end.

    element_to_matrix lets many elements share one matrix (words that
    differ only by a map-neutral suffix); images are computed once per
    distinct matrix.
    """

    def __init__(self, space, matrices, clamp=True, element_to_matrix=None):
        if space.dim != 2:
            raise UsageError("matrix elements need a planar space")
        mats = np.ascontiguousarray(matrices, dtype=np.float64)
        if mats.ndim != 3 or mats.shape[1:] != (2, 2):
            raise UsageError("matrices must be (E, 2, 2)")
        mats.setflags(write=False)
        self.space = space
        self.matrices = mats
        self.clamp = clamp
        if element_to_matrix is None:
            element_to_matrix = np.arange(mats.shape[0], dtype=np.int64)
        self.element_to_matrix = np.ascontiguousarray(element_to_matrix, dtype=np.int64)
        self._registered = {}

    def register_element_sets(self, arrays):
        """Pre-resolve recurring element-id arrays (the filter levels)."""
        for arr in arrays:
            self._registered[id(arr)] = self._dedupe_raw(arr)

    @property
    def n_elements(self):
        return self.element_to_matrix.size

    def _matrix_images(self, matrix_ids, pts):
        out = np.empty((matrix_ids.size, pts.shape[0]), dtype=np.int64)
        for s in range(0, matrix_ids.size, _ELEMENT_CHUNK):
            sel = self.matrices[matrix_ids[s : s + _ELEMENT_CHUNK]]
            moved = np.einsum("eij,pj->epi", sel, pts)
            out[s : s + _ELEMENT_CHUNK] = self.space.snap_many(
                moved.reshape(-1, 2), clamp=self.clamp
            ).reshape(sel.shape[0], pts.shape[0])
        return out

    def _dedupe_raw(self, element_ids):
        # counting-sort dedupe; matrix ids are dense, so no argsort needed
        base = self.element_to_matrix[np.asarray(element_ids)]
        flags = np.zeros(self.matrices.shape[0], dtype=bool)
        flags[base] = True
        uniq = np.flatnonzero(flags)
        rank = np.cumsum(flags) - 1
        return uniq, rank[base]

    def _dedupe(self, element_ids):
        hit = self._registered.get(id(element_ids))
        return hit if hit is not None else self._dedupe_raw(element_ids)

    def element_images(self, element_ids, point_ids):
        uniq, inv = self._dedupe(element_ids)
        pts = self.space.coords[np.asarray(point_ids)]
        return self._matrix_images(uniq, pts)[inv]

    def image_mask(self, element_ids, point_mask):
        uniq, _ = self._dedupe(element_ids)
        pts = self.space.coords[np.flatnonzero(point_mask)]
        out = np.zeros(point_mask.size, dtype=bool)
        out[self._matrix_images(uniq, pts).ravel()] = True
        return out


class FlowAction:
    """Constant-control flows sampled on a duration lattice.

    Element (u_index, dur_index) integrates the field with control value
    u for dur_index * dur_step time units (classic RK4, fixed step dt) and
    snaps only the endpoint.  Trajectories are cached per start point.
    """

    def __init__(self, space, rhs, u_values, dur_step, n_durations, dt, clamp=True):
        self.space = space
        self.rhs = rhs  # rhs(states (m,d), u) -> derivatives (m,d)
        self.u_values = tuple(float(u) for u in u_values)
        self.dur_step = float(dur_step)
        self.n_durations = int(n_durations)
        self.dt = float(dt)
        steps = self.dur_step / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise UsageError("duration lattice must align with the integrator step")
        self._steps_per_dur = int(round(steps))
        self.clamp = clamp
        self._cache = {}  # point id -> (n_u, n_durations) endpoint indices

    @property
    def n_elements(self):
        return len(self.u_values) * self.n_durations

    def element_label(self, e):
        u_idx, d_idx = divmod(int(e), self.n_durations)
        return (self.u_values[u_idx], d_idx * self.dur_step)

    def _integrate_missing(self, point_ids):
        missing = [int(p) for p in point_ids if int(p) not in self._cache]
        if not missing:
            return
        sp = self.space
        starts = sp.coords[missing]
        n_u = len(self.u_values)
        snap0 = sp.snap_many(starts, clamp=self.clamp)
        results = np.empty((len(missing), n_u, self.n_durations), dtype=np.int64)
        for ui, u in enumerate(self.u_values):
            states = starts.copy()
            results[:, ui, 0] = snap0
            dt = self.dt
            for d_idx in range(1, self.n_durations):
                for _ in range(self._steps_per_dur):
                    k1 = self.rhs(states, u)
                    k2 = self.rhs(states + 0.5 * dt * k1, u)
                    k3 = self.rhs(states + 0.5 * dt * k2, u)
                    k4 = self.rhs(states + dt * k3, u)
                    states = states + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                results[:, ui, d_idx] = sp.snap_many(states, clamp=self.clamp)
        for row, p in enumerate(missing):
            block = results[row].copy()
            block.setflags(write=False)
            self._cache[p] = block

    def prefetch(self, point_ids):
        self._integrate_missing([int(p) for p in np.asarray(point_ids).ravel()])

    def element_images(self, element_ids, point_ids):
        point_ids = [int(p) for p in np.asarray(point_ids).ravel()]
        self._integrate_missing(point_ids)
        element_ids = np.asarray(element_ids)
        u_idx, d_idx = np.divmod(element_ids, self.n_durations)
        out = np.empty((element_ids.size, len(point_ids)), dtype=np.int64)
        for col, p in enumerate(point_ids):
            out[:, col] = self._cache[p][u_idx, d_idx]
        return out

    def image_mask(self, element_ids, point_mask):
        out = np.zeros(point_mask.size, dtype=bool)
        img = self.element_images(element_ids, np.flatnonzero(point_mask))
        out[img.ravel()] = True
        return out


# ---------------------------------------------------------------------------
# the sampled semigroup with its filter chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelAlgebra:
    """Composition and filter membership on element labels.

    compose(a, b) is the label of "apply b, then a".  filter_member decides
    membership of a (possibly composed) label in a filter level; exact is
    True only when that predicate provably decides the continuum object.
    """

    compose: object
    filter_member: object
    exact: bool = False


class SemigroupSample:
    """Finite sample of a semigroup action plus a descending filter chain."""

    def __init__(self, space, family, backend, filter_levels, labels=None,
                 label_algebra=None, sampled=True, name="action"):
        self.space = space
        self.family = family
        self.backend = backend
        self.name = name
        self.sampled = bool(sampled)
        self.labels = tuple(labels) if labels is not None else None
        self.label_algebra = label_algebra
        levels = []
        for lv in filter_levels:
            arr = np.unique(np.asarray(lv, dtype=np.int64))
            if arr.size == 0:
                raise UsageError("filter levels must be nonempty")
            levels.append(arr)
        for a, b in zip(levels, levels[1:]):
            if b.size >= a.size or not np.isin(b, a, assume_unique=True).all():
                raise UsageError("filter chain must be strictly descending")
        for arr in levels[1:]:
            if not np.isin(arr, levels[0], assume_unique=True).all():
                raise UsageError("every filter element must appear at level 1")
        self.filter_levels = tuple(levels)
        self._orbit_memo = {}
        if hasattr(backend, "register_element_sets"):
            backend.register_element_sets(self.filter_levels)

    _ORBIT_MEMO_MAX = 20_000

    @property
    def depth(self):
        return len(self.filter_levels)

    def level_elements(self, k):
        if not 1 <= k <= self.depth:
            raise UsageError(f"filter level {k} outside 1..{self.depth}")
        return self.filter_levels[k - 1]

    def image_mask(self, k, mask):
        return self.backend.image_mask(self.level_elements(k), mask)

    def prefetch(self, point_ids):
        """Hint for trajectory-backed actions: integrate these starts in
        one vectorized batch instead of on demand one by one."""
        if hasattr(self.backend, "prefetch"):
            self.backend.prefetch(point_ids)

    def point_images(self, k, x):
        key = (int(k), int(x))
        hit = self._orbit_memo.get(key)
        if hit is not None:
            return np.unpackbits(hit, count=self.space.n).astype(bool)
        one = np.zeros(self.space.n, dtype=bool)
        one[int(x)] = True
        out = self.backend.image_mask(self.level_elements(k), one)
        if len(self._orbit_memo) < self._ORBIT_MEMO_MAX:
            self._orbit_memo[key] = np.packbits(out)
        return out


# ---------------------------------------------------------------------------
# orbital operators
# ---------------------------------------------------------------------------


def orbit_K(action: SemigroupSample, filter_level: int, x: int) -> PointSet:
    """Image of x under the elements of one filter level (closed orbit)."""
    return PointSet(action.space, action.point_images(filter_level, x))


@dataclass(frozen=True)
class ProlongationResult:
    set_at_level: PointSet  # images of the star at the requested level
    stabilized: PointSet  # intersection over all coarser star levels
    profile: tuple  # (star_level, cardinality) pairs
    degenerate: bool  # star at the requested level was just {x}


def prolongation_D(action: SemigroupSample, filter_level: int, x: int,
                   star_level: int) -> ProlongationResult:
    """Images of shrinking stars around x under one filter level."""
    fam = action.family
    star_level = fam.check_level(star_level)
    inter = None
    profile = []
    last = None
    for j in range(1, star_level + 1):
        s = fam.point_star_mask(x, j)
        img = action.image_mask(filter_level, s)
        inter = img if inter is None else (inter & img)
        profile.append((j, int(np.count_nonzero(img))))
        last = img
    return ProlongationResult(
        set_at_level=PointSet(action.space, last),
        stabilized=PointSet(action.space, inter),
        profile=tuple(profile),
        degenerate=fam.star_is_degenerate(x, star_level),
    )


@dataclass(frozen=True)
class LimitResult:
    set: PointSet
    diagnostic: ConvergenceDiagnostic
    terms: tuple  # the net of orbit images, one per filter level


def limit_set_only(action: SemigroupSample, x: int) -> PointSet:
    """The limit set alone, skipping the convergence diagnostic."""
    inter = action.point_images(1, x).copy()
    for k in range(2, action.depth + 1):
        inter &= action.point_images(k, x)
    return PointSet(action.space, inter)


def limit_L(action: SemigroupSample, x: int, depth: int = None) -> LimitResult:
    """Nested intersection of the orbit images along the filter chain."""
    fam = action.family
    depth = fam.m if depth is None else fam.check_level(depth)
    terms = [orbit_K(action, k, x) for k in range(1, action.depth + 1)]
    inter = terms[0].mask.copy()
    for t in terms[1:]:
        inter &= t.mask
    limit = PointSet(action.space, inter)
    ups = [rho_H(fam, t, limit) for t in terms]
    diag = converges_to_O(ups, depth)
    return LimitResult(set=limit, diagnostic=diag, terms=tuple(terms))


def omega_set(action: SemigroupSample, Y: PointSet) -> PointSet:
    """Nested intersection of the images of a whole set."""
    require_nonempty(Y, "seed set")
    inter = None
    for k in range(1, action.depth + 1):
        img = action.image_mask(k, Y.mask)
        inter = img if inter is None else (inter & img)
    return PointSet(action.space, inter)


def prolongational_set_only(action: SemigroupSample, x: int, depth: int) -> PointSet:
    """The prolongational limit set alone.

    Star images are monotone in both the filter level and the star level,
    so the grid intersection collapses to its deepest corner.
    """
    fam = action.family
    s = fam.point_star_mask(x, fam.check_level(depth))
    return PointSet(action.space, action.image_mask(action.depth, s))


def prolongational_J(action: SemigroupSample, x: int, depth: int) -> LimitResult:
    """Intersection over the (filter level, star level) grid, with the
    diagonal enumeration of that grid as the convergence net."""
    fam = action.family
    depth = fam.check_level(depth)
    inter = None
    diag_terms = []
    n_diag = max(action.depth, depth)
    stars = [fam.point_star_mask(x, j) for j in range(1, depth + 1)]
    for k in range(1, action.depth + 1):
        for j in range(1, depth + 1):
            img = action.image_mask(k, stars[j - 1])
            inter = img if inter is None else (inter & img)
    limit = PointSet(action.space, inter)
    for n in range(1, n_diag + 1):
        k = min(n, action.depth)
        j = min(n, depth)
        img = action.image_mask(k, stars[j - 1])
        diag_terms.append(PointSet(action.space, img))
    ups = [rho_H(fam, t, limit) for t in diag_terms]
    return LimitResult(set=limit, diagnostic=converges_to_O(ups, depth), terms=tuple(diag_terms))


def attraction_domain(action: SemigroupSample, Y: PointSet, target_level: int) -> PointSet:
    """Points whose orbit tail at some filter level sits inside St[Y, U_k]."""
    require_nonempty(Y, "attractor set")
    fam = action.family
    target = fam.star_mask(Y.mask, fam.check_level(target_level))
    n = action.space.n
    member = np.zeros(n, dtype=bool)
    all_pts = np.arange(n, dtype=np.int64)
    for k in range(1, action.depth + 1):
        todo = all_pts[~member]
        if todo.size == 0:
            break
        eids = action.level_elements(k)
        ok = np.ones(todo.size, dtype=bool)
        for s in range(0, eids.size, _ELEMENT_CHUNK):
            img = action.backend.element_images(eids[s : s + _ELEMENT_CHUNK], todo)
            ok &= target[img].all(axis=0)
            if not ok.any():
                break
        member[todo[ok]] = True
    return PointSet(action.space, member)


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    kind: str  # "stable" | "uniformly_stable" | "eventually_stable"
    target_level: int
    verdict: bool
    witnesses: tuple  # per-point (point, witness_level) or set-level info
    failures: tuple  # counterexample records
    degenerate: bool  # witness search had no informative star level
    approximate: bool

    def summary(self):
        ok = "holds" if self.verdict else "fails"
        return f"{self.kind} at target level {self.target_level}: {ok}"


def _finest_informative_set_level(family, mask):
    for j in range(family.m, 0, -1):
        s = family.star_mask(mask, j)
        if (s & ~mask).any():
            return j
    return None


def is_stable(action: SemigroupSample, Y: PointSet, target_level: int,
              uniform: bool = False) -> StabilityReport:
    """Orbits from small stars around Y stay inside St[Y, target].

    The witness star level is the finest level whose star still adds a
    point (a singleton star would make the check vacuous); failing there
    means failing at every level.  The sampled semigroup is filter level 1.
    """
    require_nonempty(Y, "stable candidate")
    fam = action.family
    k = fam.check_level(target_level)
    target = fam.star_mask(Y.mask, k)
    eids = action.level_elements(1)
    failures = []
    witnesses = []
    degenerate = False

    if uniform:
        j = _finest_informative_set_level(fam, Y.mask)
        if j is None:
            degenerate = True
            ok = bool(np.all(target[action.image_mask(1, Y.mask)]))
            return StabilityReport("uniformly_stable", k, ok, ((None, None),), (), True,
                                   action.sampled)
        src = np.flatnonzero(fam.star_mask(Y.mask, j))
        img = action.backend.element_images(eids, src)
        bad = ~target[img]
        if bad.any():
            e, p = np.argwhere(bad)[0]
            failures.append(
                {"star_point": int(src[p]), "element": int(eids[e]),
                 "escaped": int(img[e, p]), "witness_level": j}
            )
        return StabilityReport(
            "uniformly_stable", k, not failures, ((None, j),) if not failures else (),
            tuple(failures), False, action.sampled,
        )

    prefetch_union = np.zeros(action.space.n, dtype=bool)
    for y in Y.indices():
        j = fam.finest_informative_level(int(y))
        src = fam.point_star_mask(int(y), j) if j is not None else None
        if src is not None:
            prefetch_union |= src
        else:
            prefetch_union[int(y)] = True
    action.prefetch(np.flatnonzero(prefetch_union))

    for y in Y.indices():
        j = fam.finest_informative_level(int(y))
        if j is None:
            degenerate = True
            src = np.array([int(y)], dtype=np.int64)
            j_used = fam.m
        else:
            src = np.flatnonzero(fam.point_star_mask(int(y), j))
            j_used = j
        img = action.backend.element_images(eids, src)
        bad = ~target[img]
        if bad.any():
            e, p = np.argwhere(bad)[0]
            failures.append(
                {"point": int(y), "star_point": int(src[p]), "element": int(eids[e]),
                 "escaped": int(img[e, p]), "witness_level": j_used}
            )
        else:
            witnesses.append((int(y), j_used))
    return StabilityReport(
        "stable", k, not failures, tuple(witnesses), tuple(failures), degenerate,
        action.sampled,
    )


def is_eventually_stable(action: SemigroupSample, Y: PointSet,
                         target_level: int) -> StabilityReport:
    """Every point of a small star around Y is eventually mapped into
    St[Y, target] by some filter level."""
    require_nonempty(Y, "stable candidate")
    fam = action.family
    k = fam.check_level(target_level)
    target = fam.star_mask(Y.mask, k)
    j = _finest_informative_set_level(fam, Y.mask)
    degenerate = j is None
    src = np.flatnonzero(fam.star_mask(Y.mask, j)) if j is not None else Y.indices()
    action.prefetch(src)
    pending = src.copy()
    level_of = {}
    for i in range(1, action.depth + 1):
        if pending.size == 0:
            break
        eids = action.level_elements(i)
        ok = np.ones(pending.size, dtype=bool)
        for s in range(0, eids.size, _ELEMENT_CHUNK):
            img = action.backend.element_images(eids[s : s + _ELEMENT_CHUNK], pending)
            ok &= target[img].all(axis=0)
        for p in pending[ok]:
            level_of[int(p)] = i
        pending = pending[~ok]
    failures = tuple({"point": int(p), "witness_level": j} for p in pending)
    witnesses = tuple(sorted(level_of.items()))
    return StabilityReport(
        "eventually_stable", k, pending.size == 0, witnesses, failures, degenerate,
        action.sampled,
    )


def is_minimal(action: SemigroupSample, M: PointSet):
    """Every point of M must have its sampled orbit equal to M."""
    require_nonempty(M, "candidate minimal set")
    for x in M.indices():
        if orbit_K(action, 1, int(x)) != M:
            return False, int(x)
    return True, None


# ---------------------------------------------------------------------------
# filter hypotheses and limit compactness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesesReport:
    h1: bool  # established on every tested (element, level) pair
    h2: bool
    h3: bool
    witnesses: dict
    failures: dict
    approximate: bool  # failures are inconclusive on a finite chain

    def as_tuple(self):
        return (self.h1, self.h2, self.h3)


def check_hypotheses(action: SemigroupSample, sample_elements=None,
                     max_level=None) -> HypothesesReport:
    """Translation hypotheses of the filter chain, checked on labels.

    For each sampled s and tested level i we search a level j with
    s*A_j inside A_i (h1), A_j*s inside A_i (h2), A_j inside A_i*s (h3).
    Membership of composed labels uses the algebra's predicate; h3 needs an
    exact factorization through a sampled element.  A missing witness only
    means "not established within the sampled chain", so any failure turns
    the approximate flag on; positive verdicts are exact when the algebra
    says its arithmetic is.
    """
    alg = action.label_algebra
    if alg is None or action.labels is None:
        raise UsageError("hypothesis checks need element labels and an algebra")
    if sample_elements is None:
        sample_elements = action.level_elements(1)[: 8]
    top = action.depth if max_level is None else min(int(max_level), action.depth)
    labels = action.labels
    witnesses = {"h1": {}, "h2": {}, "h3": {}}
    failures = {"h1": [], "h2": [], "h3": []}

    def search(name, cond):
        for s in sample_elements:
            s_lab = labels[int(s)]
            for i in range(1, top + 1):
                found = None
                for j in range(1, action.depth + 1):
                    if all(cond(s_lab, labels[int(b)], i) for b in action.level_elements(j)):
                        found = j
                        break
                if found is None:
                    failures[name].append((s_lab, i))
                else:
                    witnesses[name][(s_lab, i)] = found

    search("h1", lambda s, b, i: alg.filter_member(alg.compose(s, b), i))
    search("h2", lambda s, b, i: alg.filter_member(alg.compose(b, s), i))

    level_label_sets = [
        {labels[int(a)] for a in action.level_elements(i)}
        for i in range(1, action.depth + 1)
    ]

    def h3_cond(s, b, i):
        # b must factor as a*s with a sampled in A_i
        for a in level_label_sets[i - 1]:
            if alg.compose(a, s) == b:
                return True
        return False

    search("h3", h3_cond)

    some_failure = any(failures.values())
    return HypothesesReport(
        h1=not failures["h1"],
        h2=not failures["h2"],
        h3=not failures["h3"],
        witnesses=witnesses,
        failures=failures,
        approximate=(not alg.exact) or some_failure,
    )


@dataclass(frozen=True)
class LimitCompactReport:
    level: int
    budget: int
    profile: tuple  # (filter_level, NoncompactnessProfile)
    first_feasible: int  # filter level, or None
    note: str = "finite-space surrogate of limit compactness"


def limit_compact_diagnostic(action: SemigroupSample, Y: PointSet, level: int,
                             budget: int = 3) -> LimitCompactReport:
    """Budgeted partition-diameter profile of the filter images of Y."""
    require_nonempty(Y, "seed set")
    fam = action.family
    level = fam.check_level(level)
    profile = []
    first = None
    for i in range(1, action.depth + 1):
        img = PointSet(action.space, action.image_mask(i, Y.mask))
        prof = noncompactness(fam, img, level, budget)
        profile.append((i, prof))
        if first is None and prof.gamma:
            first = i
    return LimitCompactReport(level=level, budget=budget, profile=tuple(profile),
                              first_feasible=first)
