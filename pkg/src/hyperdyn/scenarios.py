"""Built-in scenarios with analytically known limit behavior.

Each builder returns a Scenario bundling a grid space, a halving covering
chain, a sampled semigroup action, metadata flags describing the modeled
continuum system (asserted, not inferred), and ground-truth predicates
decidable per grid cell.  Construction is deterministic given parameters.
"""

from dataclasses import dataclass, field

import numpy as np

from .coverings import ChainFamily, ExplicitFamily, build_eps_chain
from .dynamics import FlowAction, LabelAlgebra, MatrixAction, SemigroupSample, TableAction
from .errors import UsageError
from .sets import PointSet
from .space import GridSpec, Space, build_space

_EXACT_BAND = 4.0  # target levels are exact while eps_k >= _EXACT_BAND * h


@dataclass
class Scenario:
    name: str
    space: Space
    family: ChainFamily
    action: SemigroupSample
    metadata: dict
    sample_points: tuple
    exact_target_levels: frozenset
    ground_truth: dict = field(default_factory=dict)


def _exact_levels(family, h):
    if h is None:
        return frozenset(range(1, family.m + 1))
    return frozenset(
        k for k in range(1, family.m + 1) if family.eps[k - 1] >= _EXACT_BAND * h
    )


# ---------------------------------------------------------------------------
# iterated affine contractions on a segment
# ---------------------------------------------------------------------------


def scenario_contraction(L=0.5, fixed_points=None, h=0.01, power_max=12,
                         acting_point_index=0):
    """Iteration of affine contractions with prescribed fixed points.

    The sampled semigroup is the powers f, f^2, ..., f^W of one designated
    contraction (additive exponent composition); the filter chain is the
    tail sets {k >= i}.  Every orbit collapses onto the fixed point cell.
    """
    if not 0.0 < L < 1.0:
        raise UsageError("Lipschitz constant must be in (0, 1)")
    if fixed_points is None:
        fixed_points = tuple(round(0.02 * i, 10) for i in range(50))
    space = build_space(GridSpec(lows=(0.0,), highs=(1.0,), resolution=h))
    family = build_eps_chain(space, eps1=0.64, m=7)
    p = float(fixed_points[acting_point_index])

    powers = np.arange(1, power_max + 1)
    table = np.empty((power_max, space.n), dtype=np.int64)
    for row, k in enumerate(powers):
        moved = (L**k) * (space.coords - p) + p
        table[row] = space.snap_many(moved)
    filter_levels = [np.flatnonzero(powers >= i) for i in range(1, power_max + 1)]
    algebra = LabelAlgebra(
        compose=lambda a, b: a + b,
        filter_member=lambda lab, i: lab >= i,
        exact=True,
    )
    action = SemigroupSample(
        space, family, TableAction(table), filter_levels,
        labels=tuple(int(k) for k in powers), label_algebra=algebra,
        sampled=True, name="contraction",
    )
    sample = tuple(space.snap((v,)) for v in (0.0, 0.1, 0.3, 0.5, 0.8, 1.0))
    return Scenario(
        name="contraction",
        space=space,
        family=family,
        action=action,
        metadata={
            "locally_compact": True,
            "connected_filter_sets": False,  # integer tail sets are discrete
            "cocompact_filter": True,
            "H1": True, "H2": True, "H3": True,
            "weak_transitive": False,
        },
        sample_points=sample,
        exact_target_levels=_exact_levels(family, h),
        ground_truth={
            "lipschitz": L,
            "fixed_points": tuple(float(v) for v in fixed_points),
            "acting_fixed_point": p,
            "limit_cell": int(space.snap((p,))),
            # continuity margin: a 2*delta agreement at the fixed point of f
            # forces the fixed points within eps
            "delta_of_eps": lambda eps: eps * (1.0 - L) / 2.0,
        },
    )


# ---------------------------------------------------------------------------
# two-parameter exponential contraction toward the vertical axis
# ---------------------------------------------------------------------------


def scenario_multitime(b=0.5, h=0.05, lattice_step=0.25, s_max=10.0, t_max=4.0,
                       filter_step=1.0, t_floor=1.0, depth=8, direction="x"):
    """Planar action (s,t)(x,y) = (b^s x, b^t y) on [-2,2]^2.

    direction "x": the filter descends along s; each member also carries
    the time floor t >= t_floor in the cross direction, which pins the
    limit segment at {0} x [0, b^t_floor * y].  direction "diagonal"
    descends along both coordinates and contracts limits to the origin.
    """
    if not 0.0 < b < 1.0:
        raise UsageError("base must be in (0, 1)")
    space = build_space(GridSpec(lows=(-2.0, -2.0), highs=(2.0, 2.0), resolution=h))
    family = build_eps_chain(space, eps1=0.8, m=5)

    if direction == "diagonal":
        s_max = t_max = max(s_max, t_max)
    s_vals = np.round(np.arange(0.0, s_max + 1e-9, lattice_step), 10)
    t_vals = np.round(np.arange(0.0, t_max + 1e-9, lattice_step), 10)
    elems = [(float(s), float(t)) for s in s_vals for t in t_vals]
    table = np.empty((len(elems), space.n), dtype=np.int64)
    chunk = 128
    for s0 in range(0, len(elems), chunk):
        block = elems[s0 : s0 + chunk]
        scale = np.array([[b**s, b**t] for s, t in block])
        moved = space.coords[None, :, :] * scale[:, None, :]
        table[s0 : s0 + chunk] = space.snap_many(
            moved.reshape(-1, 2)
        ).reshape(len(block), space.n)

    labels = tuple(elems)
    ids = np.arange(len(elems))
    if direction == "x":
        def member(lab, i):
            if i == 1:
                return True
            s, t = lab
            return s >= (i - 1) * filter_step and t >= t_floor
    elif direction == "diagonal":
        def member(lab, i):
            if i == 1:
                return True
            s, t = lab
            return s >= (i - 1) * filter_step and t >= (i - 1) * filter_step
    else:
        raise UsageError("direction must be 'x' or 'diagonal'")
    filter_levels = [
        ids[[member(lab, i) for lab in labels]] for i in range(1, depth + 2)
    ]
    algebra = LabelAlgebra(
        compose=lambda a, c: (a[0] + c[0], a[1] + c[1]),
        filter_member=member,
        exact=True,
    )
    action = SemigroupSample(
        space, family, TableAction(table), filter_levels,
        labels=labels, label_algebra=algebra, sampled=True,
        name=f"multitime-{direction}",
    )

    def segment_cells(x, y):
        if direction == "diagonal":
            return PointSet.from_indices(space, [space.snap((0.0, 0.0))])
        top = b**t_floor * y
        zs = np.arange(0.0, top + 1e-12, h)
        pts = np.stack([np.zeros_like(zs), zs], axis=1)
        return PointSet(space, np.isin(np.arange(space.n), space.snap_many(pts)))

    sample = tuple(
        int(space.snap(c))
        for c in ((1.0, 1.0), (0.5, 0.5), (-1.0, 0.5), (0.25, -0.75), (0.0, 0.0))
    )
    h3 = direction == "diagonal"  # boundary-direction translates fail H3
    return Scenario(
        name=f"multitime-{direction}",
        space=space,
        family=family,
        action=action,
        metadata={
            "locally_compact": True,
            "connected_filter_sets": True,
            "cocompact_filter": False,
            "H1": True, "H2": True, "H3": h3,
            "weak_transitive": True,
        },
        sample_points=sample,
        exact_target_levels=_exact_levels(family, h),
        ground_truth={"base": b, "segment_cells": segment_cells, "t_floor": t_floor},
    )


# ---------------------------------------------------------------------------
# planar control systems
# ---------------------------------------------------------------------------


def _rk4_step_matrix(A, dt):
    B = A * dt
    return np.eye(2) + B + B @ B / 2.0 + B @ B @ B / 6.0 + B @ B @ B @ B / 24.0


def scenario_control_spiral(h=0.05, dt=0.01, rot_step=0.03, decay_step=0.03,
                            decay_max=12.0, pad_count=9):
    """Rotation field with an optional damping control on [-2,2]^2.

    Bang-bang words run the plain rotation for a lattice duration, the
    damped field for another, then pad with whole turns (numerically the
    identity; idealized to it) so that total time grows along the filter
    while the reachable disk persists.  All flows are linear, so word maps
    are products of per-step integrator matrices, applied exactly.
    """
    space = build_space(GridSpec(lows=(-2.0, -2.0), highs=(2.0, 2.0), resolution=h))
    family = build_eps_chain(space, eps1=0.8, m=5)

    A0 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    A1 = np.array([[-1.0, 1.0], [-1.0, 0.0]])
    R0 = _rk4_step_matrix(A0, dt)
    R1 = _rk4_step_matrix(A1, dt)

    def lattice_matrices(step_mat, step_time, t_hi):
        per = int(round(step_time / dt))
        count = int(round(t_hi / step_time)) + 1
        out = np.empty((count, 2, 2))
        out[0] = np.eye(2)
        base = np.linalg.matrix_power(step_mat, per)
        for i in range(1, count):
            out[i] = base @ out[i - 1]
        return out

    two_pi = 2.0 * np.pi
    rots = lattice_matrices(R0, rot_step, two_pi)
    decays = lattice_matrices(R1, decay_step, decay_max)
    n_rot, n_dec = rots.shape[0], decays.shape[0]

    mats = np.einsum("aij,bjk->abik", decays, rots).reshape(n_dec * n_rot, 2, 2)
    # whole-turn pads deviate from the identity by the integrator error
    # (~1e-7); idealizing them to the exact identity dedupes the maps
    base_idx = np.tile(np.arange(n_dec * n_rot), pad_count + 1)
    backend = MatrixAction(space, mats, clamp=True, element_to_matrix=base_idx)

    rot_times = rot_step * np.arange(n_rot)
    dec_times = decay_step * np.arange(n_dec)
    word_time = (dec_times[:, None] + rot_times[None, :]).reshape(-1)
    total_time = (
        word_time[None, :] + two_pi * np.arange(pad_count + 1)[:, None]
    ).reshape(-1)
    filter_levels = [
        np.flatnonzero(total_time >= (i - 1) * two_pi) for i in range(1, pad_count + 2)
    ]
    action = SemigroupSample(
        space, family, backend, filter_levels, labels=None, label_algebra=None,
        sampled=True, name="control-spiral",
    )

    def disk_cells(x_idx):
        r = float(np.sqrt((space.coords[x_idx] ** 2).sum()))
        rr = np.sqrt((space.coords**2).sum(axis=1))
        return PointSet(space, rr <= r + 1e-12)

    rng_pts = [
        (1.0, 0.0), (0.0, 0.75), (-0.5, 0.5), (0.35, -0.6), (0.9, 0.45),
        (-1.1, 0.0), (0.6, 0.6), (-0.25, -0.9), (1.2, -0.3), (0.15, 0.2),
        (0.45, 0.0), (-0.7, -0.4), (0.8, -0.8), (-0.95, 0.6), (0.3, 1.1),
        (1.25, 0.35), (-0.4, 1.0), (0.05, -0.5), (-1.3, -0.2), (0.7, 1.05),
    ]
    sample = tuple(int(space.snap(c)) for c in rng_pts)
    return Scenario(
        name="control-spiral",
        space=space,
        family=family,
        action=action,
        metadata={
            "locally_compact": True,
            "connected_filter_sets": True,
            "cocompact_filter": False,
            "H1": True, "H2": True, "H3": False,
            "weak_transitive": True,
        },
        sample_points=sample,
        exact_target_levels=_exact_levels(family, h),
        ground_truth={"disk_cells": disk_cells},
    )


def scenario_control_disk(h=0.05, dt=0.01, dur_step=0.1, dur_max=72.0,
                          filter_time=6.0, depth=8):
    """Rotation plus a radial field pulling toward 0 inside the unit circle
    and toward the circle outside; controls scale the radial part.

    Limit sets: the unit circle band for starts on or outside it, the
    origin cell strictly inside.  Nonlinear, so words integrate pointwise
    (classic RK4, endpoint snap only).
    """
    space = build_space(GridSpec(lows=(-2.0, -2.0), highs=(2.0, 2.0), resolution=h))
    family = build_eps_chain(space, eps1=0.8, m=5)

    def rhs(states, u):
        x = states[:, 0]
        y = states[:, 1]
        r2 = x * x + y * y
        radial = -u * (1.0 - r2) ** 2
        return np.stack([y + radial * x, -x + radial * y], axis=1)

    n_dur = int(round(dur_max / dur_step)) + 1
    backend = FlowAction(space, rhs, u_values=(1.0, 2.0), dur_step=dur_step,
                         n_durations=n_dur, dt=dt, clamp=True)
    durations = dur_step * np.arange(n_dur)
    total = np.concatenate([durations, durations])  # u=1 block, u=2 block
    steps = np.rint(durations / dt).astype(np.int64)
    labels = tuple(
        ((u, int(s)),) if s else ()
        for u in (1.0, 2.0)
        for s in steps
    )
    filter_levels = [
        np.flatnonzero(total >= (i - 1) * filter_time) for i in range(1, depth + 2)
    ]

    def compose(a, c):
        # apply c first, then a; adjacent equal controls merge
        segs = list(c) + list(a)
        out = []
        for u, s in segs:
            if out and out[-1][0] == u:
                out[-1] = (u, out[-1][1] + s)
            else:
                out.append((u, s))
        return tuple(out)

    algebra = LabelAlgebra(
        compose=compose,
        filter_member=lambda lab, i: sum(s for _, s in lab) * dt >= (i - 1) * filter_time,
        exact=False,
    )
    action = SemigroupSample(
        space, family, backend, filter_levels, labels=labels,
        label_algebra=algebra, sampled=True, name="control-disk",
    )

    rr = np.sqrt((space.coords**2).sum(axis=1))
    circle_band = PointSet(space, np.abs(rr - 1.0) <= h * 0.75)
    origin = PointSet.from_indices(space, [space.snap((0.0, 0.0))])

    def limit_cells(x_idx):
        r = float(rr[x_idx])
        return circle_band if r >= 1.0 else origin

    sample = tuple(
        int(space.snap(c))
        for c in ((1.0, 0.0), (0.5, 0.0), (1.5, 0.0), (0.0, -0.3), (-1.2, 0.4),
                  (0.25, 0.25), (-0.6, -0.6), (0.0, 1.0))
    )
    return Scenario(
        name="control-disk",
        space=space,
        family=family,
        action=action,
        metadata={
            "locally_compact": True,
            "connected_filter_sets": True,
            "cocompact_filter": False,
            "H1": True, "H2": True, "H3": False,
            "weak_transitive": True,
        },
        sample_points=sample,
        exact_target_levels=_exact_levels(family, h),
        ground_truth={
            "circle_band": circle_band,
            "origin_cell": origin,
            "limit_cells": limit_cells,
            "attractor_disk": PointSet(space, rr <= 1.0 + 1e-12),
        },
    )


# ---------------------------------------------------------------------------
# finite homogeneous space: subgroup translations on a discretized circle
# ---------------------------------------------------------------------------


def scenario_coset(n=360, subgroup_order=3):
    """Left translations by a finite subgroup of the discretized circle.

    The orbit map sends a point to its coset; the induced two-sided star
    distance between cosets dominates the point proximity (the quotient
    projection is uniformly continuous), and every coset is stable.
    """
    if n % subgroup_order != 0:
        raise UsageError("subgroup order must divide the circle size")
    space = build_space(
        GridSpec(lows=(0.0,), highs=(float(n),), resolution=1.0, metric="circle")
    )
    m = 8
    family = build_eps_chain(space, eps1=float(2 ** (m - 1)), m=m)
    step = n // subgroup_order
    shifts = [k * step for k in range(subgroup_order)]
    table = np.stack([(np.arange(n) + s) % n for s in shifts]).astype(np.int64)
    algebra = LabelAlgebra(
        compose=lambda a, c: (a + c) % n,
        filter_member=lambda lab, i: True,
        exact=True,
    )
    action = SemigroupSample(
        space, family, TableAction(table), [np.arange(subgroup_order)],
        labels=tuple(shifts), label_algebra=algebra, sampled=False, name="coset",
    )

    def coset_of(g):
        return PointSet.from_indices(space, [(g + s) % n for s in shifts])

    return Scenario(
        name="coset",
        space=space,
        family=family,
        action=action,
        metadata={
            "locally_compact": True,
            "connected_filter_sets": False,
            "cocompact_filter": True,
            "H1": True, "H2": True, "H3": True,
            "weak_transitive": True,
        },
        sample_points=tuple(range(0, n, max(1, n // 12))),
        exact_target_levels=_exact_levels(family, 1.0),
        ground_truth={"coset_of": coset_of, "subgroup": tuple(shifts)},
    )


# ---------------------------------------------------------------------------
# random small instances for property tests
# ---------------------------------------------------------------------------


def random_instance(seed, n_points=6, n_coverings=3):
    """Deterministic small metric space with a validated explicit family.

    The finest covering is always the singleton covering, which guarantees
    both the basis condition and directedness.
    """
    if not 2 <= n_points <= 8:
        raise UsageError("random instances keep 2..8 points")
    if not 2 <= n_coverings <= 4:
        raise UsageError("random instances keep 2..4 coverings")
    rng = np.random.default_rng(int(seed))
    for _ in range(64):
        coords = rng.uniform(0.0, 1.0, size=(n_points, 2))
        diffs = coords[:, None, :] - coords[None, :, :]
        dists = np.sqrt((diffs**2).sum(axis=2))
        if (dists[~np.eye(n_points, dtype=bool)] > 1e-3).all():
            break
    else:
        raise UsageError("could not separate random points")
    space = Space(coords, kind="euclidean")

    coverings = []
    for _ in range(n_coverings - 1):
        p = int(rng.integers(2, n_points + 1))
        members = np.zeros((p, n_points), dtype=bool)
        for row in range(p):
            size = int(rng.integers(1, n_points + 1))
            members[row, rng.choice(n_points, size=size, replace=False)] = True
        uncovered = ~members.any(axis=0)
        if uncovered.any():
            members[rng.integers(0, p)] |= uncovered
        coverings.append(members)
    coverings.append(np.eye(n_points, dtype=bool))  # singleton covering, finest
    family = ExplicitFamily(space, coverings)
    return space, family


_BUILDERS = {
    "contraction": scenario_contraction,
    "multitime": scenario_multitime,
    "control_spiral": scenario_control_spiral,
    "control_disk": scenario_control_disk,
    "coset": scenario_coset,
}


def build_scenario(name, params=None) -> Scenario:
    if name not in _BUILDERS:
        raise UsageError(f"unknown scenario {name!r}; known: {sorted(_BUILDERS)}")
    return _BUILDERS[name](**(params or {}))
