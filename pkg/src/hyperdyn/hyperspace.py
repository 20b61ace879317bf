"""Operations on the hyperspace of nonempty subsets.

rho_H is the two-sided star containment value in the ordered powerset of
the covering family; it generalizes the Hausdorff distance.  On halving
chains all values are prefix thresholds, computed either from per-pair
center scans or from star containment per level, whichever is cheaper.
"""

from dataclasses import dataclass

import numpy as np

from .coverings import (
    ChainFamily,
    ConvergenceDiagnostic,
    Covering,
    UpSet,
    converges_to_O,
    star,
    upset_meet,
)
from .errors import UsageError
from .sets import PointSet, require_nonempty


def _mask_or(family, masks):
    out = 0
    for m in masks:
        out |= int(m)
    return out


def _mask_and(family, masks):
    out = family.full_mask
    for m in masks:
        out &= int(m)
    return out


def rho_point_to_set(family, x: int, A: PointSet) -> UpSet:
    """Union of rho(x, a) over a in A; full iff x lies in A."""
    require_nonempty(A, "target set")
    x = int(x)
    if A.mask[x]:
        return UpSet.full(family)
    ids = A.indices()
    if isinstance(family, ChainFamily):
        # the nearest members decide; pairs with d/2 above the best radius
        # cannot improve, so scan in ascending distance order and stop early
        d = family.space.distances_from(x)[ids]
        order = np.argsort(d, kind="stable")
        best = np.inf
        for k in order:
            if d[k] / 2.0 >= best:
                break
            r = float(family.minmax_radius([x], [int(ids[k])])[0])
            if r < best:
                best = r
        t = int((best < family.eps).sum())
        return UpSet(family, family.prefix_mask(t))
    table = family.rho_table()
    return UpSet(family, _mask_or(family, table[x, ids]))


def _one_sided_mask(family, A: PointSet, B: PointSet) -> int:
    """Levels U with B contained in St[A, U]."""
    if B.issubset(A):
        return family.full_mask
    if isinstance(family, ChainFamily):
        t = 0
        for k in range(1, family.m + 1):
            if bool(np.all(family.star_mask(A.mask, k)[B.mask])):
                t = k
            else:
                break
        return family.prefix_mask(t)
    table = family.rho_table()
    a_ids = A.indices()
    masks = [_mask_or(family, table[b, a_ids]) for b in B.indices()]
    return _mask_and(family, masks)


def rho_one_sided(family, A: PointSet, B: PointSet) -> UpSet:
    """Meet over b in B of rho(b, A): levels at which B sits inside St[A, .]."""
    require_nonempty(A, "first set")
    require_nonempty(B, "second set")
    return UpSet(family, _one_sided_mask(family, A, B))


def rho_H(family, A: PointSet, B: PointSet) -> UpSet:
    """Two-sided star containment value; full iff A equals B."""
    require_nonempty(A, "first set")
    require_nonempty(B, "second set")
    return UpSet(family, _one_sided_mask(family, A, B) & _one_sided_mask(family, B, A))


def in_ball_BH(family, B: PointSet, A: PointSet, level: int) -> bool:
    """Hyperspace ball membership: mutual star containment at one level."""
    require_nonempty(A, "center set")
    require_nonempty(B, "candidate set")
    level = family.check_level(level)
    sa = family.star_mask(A.mask, level)
    if not np.all(sa[B.mask]):
        return False
    sb = family.star_mask(B.mask, level)
    return bool(np.all(sb[A.mask]))


def in_ball_covering(B: PointSet, A: PointSet, cov: Covering) -> bool:
    """Same mutual containment against a covering outside any family."""
    require_nonempty(A, "center set")
    require_nonempty(B, "candidate set")
    return bool(
        np.all(cov.star_mask(A.mask)[B.mask]) and np.all(cov.star_mask(B.mask)[A.mask])
    )


# ---------------------------------------------------------------------------
# Vietoris basic sets
# ---------------------------------------------------------------------------


def touched_members(A: PointSet, U: Covering):
    """Member rows of U meeting A."""
    members = U.materialize()
    return members[members[:, A.mask].any(axis=1)]


def vietoris_member(B: PointSet, A: PointSet, U: Covering) -> bool:
    """B lies in the union of the members meeting A and meets each of them."""
    require_nonempty(A, "base set")
    require_nonempty(B, "candidate set")
    rows = touched_members(A, U)
    if not np.all(rows.any(axis=0)[B.mask]):
        return False
    return bool(rows[:, B.mask].any(axis=1).all())


def vietoris_refinement(A: PointSet, U: Covering) -> Covering:
    """Covering V with ball(A, V) inside the basic set of (A, U).

    For each member touching A, one marked point of A is removed from all
    other touched members; the common refinement of those punctured
    coverings (plus the complement of A) does the job.
    """
    require_nonempty(A, "base set")
    space = A.space
    rows = touched_members(A, U)
    p = rows.shape[0]
    marked = [int(np.flatnonzero(rows[i] & A.mask)[0]) for i in range(p)]
    complement = ~A.mask
    layered = []
    for i in range(p):
        members = []
        for j in range(p):
            row = rows[j].copy()
            if j != i:
                row[marked[i]] = False
            if row.any():
                members.append(row)
        if complement.any():
            members.append(complement)
        layered.append(members)

    # fold the common refinement across the punctured coverings
    acc = list(layered[0]) if layered else [np.ones(space.n, dtype=bool)]
    for members in layered[1:]:
        nxt = {}
        for a in acc:
            for b in members:
                c = a & b
                if c.any():
                    nxt[c.tobytes()] = c
        acc = list(nxt.values())
    acc.sort(key=lambda r: r.tobytes())
    return Covering(space, level_id=None, members=np.stack(acc))


# ---------------------------------------------------------------------------
# diameter and measures of noncompactness
# ---------------------------------------------------------------------------


def diameter(family, Y: PointSet) -> UpSet:
    """Meet of rho over all pairs inside Y."""
    require_nonempty(Y, "set")
    ids = Y.indices()
    if ids.size == 1:
        return UpSet.full(family)
    if isinstance(family, ChainFamily):
        sp = family.space
        # the widest pair decides; pairs whose distance is below the current
        # worst radius cannot raise it (radius <= distance), so scan in
        # descending distance order and stop early
        pts = sp.coords[ids]
        ii, jj = np.triu_indices(ids.size, k=1)
        if sp.kind == "table":
            d = sp.dist_table()[np.ix_(ids, ids)][ii, jj]
        else:
            diffs = np.abs(pts[ii] - pts[jj])
            if sp.periods is not None:
                per = np.asarray(sp.periods)
                diffs = np.minimum(diffs, per - diffs)
            d = np.sqrt((diffs**2).sum(axis=1))
        order = np.argsort(-d, kind="stable")
        worst = 0.0
        for k in order:
            if d[k] <= worst:
                break
            r = float(family.minmax_radius([ids[ii[k]]], [ids[jj[k]]])[0])
            if r > worst:
                worst = r
        t = int((worst < family.eps).sum())
        return UpSet(family, family.prefix_mask(t))
    table = family.rho_table()
    sub = table[np.ix_(ids, ids)]
    return UpSet(family, _mask_and(family, sub[np.triu_indices(ids.size, k=1)]))


@dataclass(frozen=True)
class NoncompactnessProfile:
    alpha: bool
    gamma: bool
    alpha_count: int
    gamma_count: int
    exact: bool  # False when counts are greedy upper bounds


_EXACT_COVER_MAX = 16


def _min_set_cover(universe_bits, candidate_masks):
    """Exact minimum cover of a small universe by candidate bitmasks."""
    # keep only maximal distinct candidates
    cands = sorted(set(candidate_masks), key=lambda m: (-bin(m).count("1"), m))
    maximal = []
    for c in cands:
        if not any(c != d and (c | d) == d for d in cands):
            maximal.append(c)
    best = len(maximal) + 1
    order = maximal

    def dfs(remaining, used):
        nonlocal best
        if used >= best:
            return
        if remaining == 0:
            best = used
            return
        low = remaining & -remaining  # cover the lowest uncovered element
        for c in order:
            if c & low:
                dfs(remaining & ~c, used + 1)

    dfs(universe_bits, 0)
    return best


def _greedy_set_cover(universe_bits, candidate_masks):
    remaining = universe_bits
    count = 0
    cands = sorted(set(candidate_masks))
    while remaining:
        gain, pick = 0, None
        for c in cands:
            g = bin(c & remaining).count("1")
            if g > gain:
                gain, pick = g, c
        if pick is None:
            return None
        remaining &= ~pick
        count += 1
    return count


def _min_clique_cover(adj_masks):
    """Exact minimum partition of vertices 0..n-1 into cliques."""
    n = len(adj_masks)
    greedy = _greedy_clique_cover(adj_masks)
    best = [greedy]

    def dfs(assigned_cliques, idx):
        if len(assigned_cliques) >= best[0]:
            return
        if idx == n:
            best[0] = len(assigned_cliques)
            return
        for k in range(len(assigned_cliques)):
            members = assigned_cliques[k]
            if members & ~adj_masks[idx] == 0:
                assigned_cliques[k] = members | (1 << idx)
                dfs(assigned_cliques, idx + 1)
                assigned_cliques[k] = members
        assigned_cliques.append(1 << idx)
        dfs(assigned_cliques, idx + 1)
        assigned_cliques.pop()

    dfs([], 0)
    return best[0]


def _greedy_clique_cover(adj_masks):
    n = len(adj_masks)
    cliques = []
    for v in range(n):
        for k, members in enumerate(cliques):
            if members & ~adj_masks[v] == 0:
                cliques[k] = members | (1 << v)
                break
        else:
            cliques.append(1 << v)
    return len(cliques)


def noncompactness(family, Y: PointSet, level: int, budget: int) -> NoncompactnessProfile:
    """Budgeted covering-number profile at one level.

    alpha: can Y be covered by at most `budget` point stars at this level;
    gamma: can Y be split into at most `budget` pieces whose diameter value
    contains the level.  On a finite space both are eventually feasible;
    the counts are the informative part.  Counts are exact up to 16 points,
    greedy upper bounds beyond (exact=False).
    """
    require_nonempty(Y, "set")
    if budget < 1:
        raise UsageError("budget must be >= 1")
    level = family.check_level(level)
    ids = Y.indices()
    ny = ids.size
    pos = {int(p): i for i, p in enumerate(ids)}
    exact = ny <= _EXACT_COVER_MAX

    # candidate star coverage masks, one per center that reaches Y
    cover_masks = {}
    for i, y in enumerate(ids):
        centers = np.flatnonzero(family.point_star_mask(int(y), level))
        for z in centers:
            cover_masks[int(z)] = cover_masks.get(int(z), 0) | (1 << i)
    universe = (1 << ny) - 1
    masks = list(cover_masks.values())
    if exact:
        alpha_count = _min_set_cover(universe, masks)
    else:
        alpha_count = _greedy_set_cover(universe, masks)

    # pairwise compatibility: both points below the level's proximity
    bit = 1 << (level - 1)
    adj = [0] * ny
    if ny > 1:
        ii, jj = np.triu_indices(ny, k=1)
        masks_pairs = family.rho_masks(ids[ii], ids[jj])
        for k in range(ii.size):
            if masks_pairs[k] & bit:
                a, b = int(ii[k]), int(jj[k])
                adj[a] |= 1 << b
                adj[b] |= 1 << a
    for v in range(ny):
        adj[v] |= 1 << v
    gamma_count = _min_clique_cover(adj) if exact else _greedy_clique_cover(adj)

    return NoncompactnessProfile(
        alpha=alpha_count <= budget,
        gamma=gamma_count <= budget,
        alpha_count=alpha_count,
        gamma_count=gamma_count,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# sequences of sets and hyperconvergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetSequence:
    """Finite record of a set sequence, optionally with a periodic tail.

    With (preperiod, period) declared, terms beyond the preperiod repeat
    and tail questions (frequently / residually / eventually) are exact.
    Otherwise evaluation is over the trailing `window` observed terms.
    """

    terms: tuple
    preperiod: int = None
    period: int = None
    window: int = None

    def __post_init__(self):
        if not self.terms:
            raise UsageError("sequence needs at least one term")
        space = self.terms[0].space
        for t in self.terms:
            if t.space is not space:
                raise UsageError("sequence mixes spaces")
            require_nonempty(t, "sequence term")
        if (self.preperiod is None) != (self.period is None):
            raise UsageError("preperiod and period come together")
        if self.is_periodic:
            if self.preperiod < 0 or self.period < 1:
                raise UsageError("bad periodic tail")
            if self.preperiod + self.period > len(self.terms):
                raise UsageError("declared tail exceeds the recorded terms")
            for n in range(self.preperiod, len(self.terms) - self.period):
                if self.terms[n] != self.terms[n + self.period]:
                    raise UsageError("terms do not repeat with the declared period")
        elif self.window is not None and not 1 <= self.window <= len(self.terms):
            raise UsageError("tail window longer than the sequence")

    @property
    def is_periodic(self):
        return self.period is not None

    def tail_terms(self):
        """Terms that decide tail behavior (one period, or the window)."""
        if self.is_periodic:
            return self.terms[self.preperiod : self.preperiod + self.period]
        w = self.window if self.window is not None else len(self.terms)
        return self.terms[len(self.terms) - w :]

    def scan_terms(self):
        """Terms relevant for first-attainment scans."""
        if self.is_periodic:
            return self.terms[: self.preperiod + self.period]
        return self.terms


@dataclass(frozen=True)
class KuratowskiLimits:
    LS: PointSet
    LI: PointSet
    level: int
    exact: bool
    window: int = None


def kuratowski_limits(family, seq: SetSequence, level: int) -> KuratowskiLimits:
    """Upper and lower limit of a set sequence at one covering level.

    A point is in LS when its star at the level meets the terms frequently,
    in LI when residually; by star symmetry that is membership in the star
    of the terms, so LS/LI are the union/intersection of the tail stars.
    """
    level = family.check_level(level)
    tail = seq.tail_terms()
    stars = [family.star_mask(t.mask, level) for t in tail]
    ls = np.zeros(family.space.n, dtype=bool)
    li = np.ones(family.space.n, dtype=bool)
    for s in stars:
        ls |= s
        li &= s
    return KuratowskiLimits(
        LS=PointSet(family.space, ls),
        LI=PointSet(family.space, li),
        level=level,
        exact=seq.is_periodic,
        window=None if seq.is_periodic else len(tail),
    )


def hausdorff_converges(family, seq: SetSequence, target: PointSet, depth: int) -> ConvergenceDiagnostic:
    """Attainment scan of rho_H(term, target) toward the full family."""
    require_nonempty(target, "target")
    ups = [rho_H(family, t, target) for t in seq.scan_terms()]
    tail = (seq.preperiod, seq.period) if seq.is_periodic else None
    return converges_to_O(ups, depth, periodic_tail=tail)
