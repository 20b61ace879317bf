import itertools

import numpy as np
import pytest

from hyperdyn import (
    PointSet,
    SetSequence,
    UpSet,
    UsageError,
    diameter,
    hausdorff_converges,
    in_ball_BH,
    kuratowski_limits,
    noncompactness,
    rho,
    rho_H,
    rho_one_sided,
    rho_point_to_set,
    upset_meet,
    upset_shift,
    vietoris_member,
    vietoris_refinement,
)
from hyperdyn.hyperspace import in_ball_covering

from conftest import (
    all_nonempty_subsets,
    oracle_diameter_mask,
    oracle_min_star_cover,
    oracle_one_sided_mask,
    oracle_rho_H_mask,
    oracle_shift1_mask,
)


def pset(space, *ids):
    return PointSet.from_indices(space, list(ids))


# -- point-to-set proximity -----------------------------------------------------


def test_rho_point_to_set_member_full(line_grid):
    space, fam = line_grid
    A = pset(space, 2, 7)
    assert rho_point_to_set(fam, 2, A).is_full


def test_rho_point_to_set_best_of(line_grid):
    space, fam = line_grid
    i0 = space.snap((0.0,))
    A = PointSet.from_indices(space, [space.snap((0.3,)), space.snap((0.9,))])
    # brute force: best of thresholds 2 (to 0.3) and 1 (to 0.9)
    assert rho_point_to_set(fam, i0, A).threshold == 2


def test_rho_point_to_set_antitone(small_instances):
    space, fam = small_instances[0]
    subs = all_nonempty_subsets(space)
    for A in subs:
        for B in subs:
            if A.issubset(B):
                ra = rho_point_to_set(fam, 0, A)
                rb = rho_point_to_set(fam, 0, B)
                assert rb.precedes(ra)


# -- one-sided values --------------------------------------------------------------


def test_one_sided_full_iff_contained(small_instances):
    for space, fam in small_instances[:3]:
        subs = all_nonempty_subsets(space)
        for A in subs:
            for B in subs:
                assert rho_one_sided(fam, A, B).is_full == B.issubset(A)


def test_one_sided_line_example(line_grid):
    space, fam = line_grid
    A = pset(space, space.snap((0.0,)))
    B = PointSet.from_indices(space, [space.snap((0.0,)), space.snap((0.3,))])
    assert rho_one_sided(fam, A, B).threshold == 2
    assert rho_one_sided(fam, B, A).is_full


def test_one_sided_matches_oracle(small_instances):
    for space, fam in small_instances[:2]:
        subs = all_nonempty_subsets(space)
        for A in subs[: len(subs) // 2]:
            for B in subs[: len(subs) // 2]:
                got = rho_one_sided(fam, A, B).mask
                assert got == oracle_one_sided_mask(fam, A, B)


# -- two-sided values ----------------------------------------------------------------


def test_rho_H_identity_and_symmetry(small_instances):
    for space, fam in small_instances:
        subs = all_nonempty_subsets(space)
        for A in subs:
            for B in subs:
                v = rho_H(fam, A, B)
                assert v.mask == rho_H(fam, B, A).mask
                assert v.is_full == (A == B)


def test_rho_H_singletons_reduce_to_rho(small_instances):
    for space, fam in small_instances[:3]:
        for x in range(space.n):
            for y in range(space.n):
                a = rho_H(fam, PointSet.singleton(space, x), PointSet.singleton(space, y))
                assert a.mask == rho(fam, x, y).mask


def test_rho_H_line_example(line_grid):
    space, fam = line_grid
    A = pset(space, space.snap((0.0,)))
    B = PointSet.from_indices(space, [space.snap((0.0,)), space.snap((0.3,))])
    assert rho_H(fam, A, B).threshold == 2


def test_star_sandwich_metric_bridge(line_grid):
    # two-sided star sandwich around the open metric dilation
    space, fam = line_grid
    Y = pset(space, space.snap((0.2,)), space.snap((0.3,)))
    for k in range(1, fam.m):
        eps = fam.eps[k - 1]
        fine = fam.star(Y, k + 1).mask  # radius eps/2
        coarse = fam.star(Y, k).mask
        dist = np.full(space.n, np.inf)
        for y in Y.indices():
            dist = np.minimum(dist, space.distances_from(int(y)))
        metric_ball = dist < eps
        assert (~fine | metric_ball).all()
        assert (~metric_ball | coarse).all()


def test_rho_H_matches_oracle(small_instances):
    for space, fam in small_instances[:2]:
        subs = all_nonempty_subsets(space)
        for A in subs:
            for B in subs:
                assert rho_H(fam, A, B).mask == oracle_rho_H_mask(fam, A, B)


def test_quasi_triangle_exhaustive(small_instances):
    space, fam = small_instances[3]  # 3 points: full triple scan
    subs = all_nonempty_subsets(space)
    for A, B, C in itertools.product(subs, repeat=3):
        lhs = rho_H(fam, A, C)
        meet = upset_meet(rho_H(fam, A, B), rho_H(fam, B, C))
        assert lhs.precedes(upset_shift(meet, 1))


def test_union_monotonicity(small_instances):
    space, fam = small_instances[0]
    subs = all_nonempty_subsets(space)
    some = subs[:: max(1, len(subs) // 6)]
    for A, B, C, D in itertools.product(some, repeat=4):
        lhs = rho_H(fam, A | B, C | D)
        rhs = upset_meet(rho_H(fam, A, C), rho_H(fam, B, D))
        assert lhs.precedes(rhs)


def test_diameter_union_estimate(small_instances):
    space, fam = small_instances[1]
    subs = all_nonempty_subsets(space)
    some = subs[:: max(1, len(subs) // 8)]
    for A, B in itertools.product(some, repeat=2):
        lhs = diameter(fam, A | B)
        bundle = upset_meet(
            upset_meet(diameter(fam, A), diameter(fam, B)), rho_H(fam, A, B)
        )
        assert lhs.precedes(upset_shift(bundle, 1))


# -- hyperspace balls and basic sets ---------------------------------------------------


def test_in_ball_reflexive(line_grid):
    space, fam = line_grid
    A = pset(space, 1, 2)
    for k in range(1, fam.m + 1):
        assert in_ball_BH(fam, A, A, k)


def test_in_ball_matches_threshold(small_instances):
    for space, fam in small_instances[:3]:
        subs = all_nonempty_subsets(space)
        for A in subs[::2]:
            for B in subs[::2]:
                v = rho_H(fam, A, B)
                for k in range(1, fam.m + 1):
                    assert in_ball_BH(fam, B, A, k) == v.contains_level(k)


def test_vietoris_reflexive_and_example():
    from hyperdyn.coverings import Covering
    from hyperdyn.space import Space

    coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    sp = Space(coords, kind="euclidean")
    members = np.array([[True, True, False], [False, True, True]])
    U = Covering(sp, level_id=None, members=members)
    A = PointSet.singleton(sp, 0)
    assert vietoris_member(A, A, U)
    B = PointSet.singleton(sp, 2)
    assert not vietoris_member(B, A, U)  # B misses the only touched member


def test_vietoris_implies_ball(small_instances):
    for space, fam in small_instances[:3]:
        subs = all_nonempty_subsets(space)
        for A in subs[::3]:
            for k in range(1, fam.m + 1):
                U = fam.covering(k)
                for B in subs[::3]:
                    if vietoris_member(B, A, U):
                        assert in_ball_BH(fam, B, A, k)


def test_vietoris_refinement_construction(small_instances):
    for space, fam in small_instances[:2]:
        subs = all_nonempty_subsets(space)
        for A in subs[:: max(1, len(subs) // 10)]:
            for k in range(1, fam.m + 1):
                U = fam.covering(k)
                V = vietoris_refinement(A, U)
                for B in subs:
                    if in_ball_covering(B, A, V):
                        assert vietoris_member(B, A, U)


# -- diameter -----------------------------------------------------------------------------


def test_diameter_singleton_full(line_grid):
    space, fam = line_grid
    assert diameter(fam, PointSet.singleton(space, 4)).is_full


def test_diameter_line_pair(line_grid):
    space, fam = line_grid
    Y = PointSet.from_indices(space, [space.snap((0.0,)), space.snap((0.3,))])
    assert diameter(fam, Y).threshold == 2


def test_diameter_antitone_and_oracle(small_instances):
    for space, fam in small_instances[:3]:
        subs = all_nonempty_subsets(space)
        for A in subs:
            assert diameter(fam, A).mask == oracle_diameter_mask(fam, A)
        for A in subs:
            for B in subs:
                if A.issubset(B):
                    assert diameter(fam, A).precedes(diameter(fam, B))


def test_diameter_pairs_precede(small_instances):
    space, fam = small_instances[0]
    subs = all_nonempty_subsets(space)
    for A in subs:
        d = diameter(fam, A)
        for x in A.indices():
            for y in A.indices():
                assert rho(fam, int(x), int(y)).precedes(d)


# -- measures of noncompactness -------------------------------------------------------------


def test_noncompactness_singleton(line_grid):
    space, fam = line_grid
    for k in range(1, fam.m + 1):
        prof = noncompactness(fam, PointSet.singleton(space, 3), k, budget=1)
        assert prof.alpha and prof.gamma
        assert prof.alpha_count == 1 and prof.gamma_count == 1


def test_noncompactness_two_clusters():
    from hyperdyn import GridSpec, build_eps_chain, build_space

    space = build_space(GridSpec(lows=(0.0,), highs=(3.0,), resolution=0.1))
    fam = build_eps_chain(space, eps1=1.6, m=5)
    ids = [space.snap((v,)) for v in (0.0, 0.1, 0.2, 2.8, 2.9, 3.0)]
    Y = PointSet.from_indices(space, ids)
    level = 4  # eps = 0.2: one star spans a cluster but not both
    prof = noncompactness(fam, Y, level, budget=2)
    assert prof.alpha and prof.alpha_count == 2
    assert prof.alpha_count == oracle_min_star_cover(fam, Y, level)


def test_noncompactness_budget_error(line_grid):
    space, fam = line_grid
    with pytest.raises(UsageError):
        noncompactness(fam, PointSet.singleton(space, 0), 1, budget=0)


def test_alpha_gamma_shift_inequalities(small_instances):
    # gamma is at least as demanding as alpha at one level, and alpha one
    # half-step finer covers gamma
    for space, fam in small_instances[:3]:
        subs = all_nonempty_subsets(space)
        for Y in subs[::2]:
            for k in range(1, fam.m + 1):
                prof = noncompactness(fam, Y, k, budget=space.n)
                assert prof.alpha_count <= prof.gamma_count
                dbl = fam.double_refinement_table()
                for kk in range(fam.m):
                    if dbl[kk][k - 1]:
                        finer = noncompactness(fam, Y, kk + 1, budget=space.n)
                        assert prof.gamma_count <= finer.alpha_count
                        break


# -- sequences ---------------------------------------------------------------------------------


def test_sequence_validation(line_grid):
    space, _ = line_grid
    a = PointSet.singleton(space, 0)
    b = PointSet.singleton(space, 5)
    with pytest.raises(UsageError):
        SetSequence((a, b, b), preperiod=0, period=2)  # b,b breaks 2-periodicity
    with pytest.raises(UsageError):
        SetSequence((a, b), window=5)
    SetSequence((a, b, a, b), preperiod=0, period=2)


def test_kuratowski_constant(line_grid5):
    space, fam = line_grid5
    F = PointSet.from_indices(space, [2, 3])
    seq = SetSequence((F, F), preperiod=0, period=1)
    lim = kuratowski_limits(fam, seq, fam.m)
    assert lim.LS == F and lim.LI == F and lim.exact


def test_kuratowski_alternating(line_grid5):
    space, fam = line_grid5
    a = PointSet.singleton(space, 0)
    b = PointSet.singleton(space, 9)
    seq = SetSequence((a, b, a, b), preperiod=0, period=2)
    lim = kuratowski_limits(fam, seq, fam.m)
    assert lim.LS == a | b
    assert lim.LI.is_empty


def test_kuratowski_decreasing_upper_bound(line_grid5):
    # a decreasing sequence whose one-sided distance to its intersection
    # attains depth has upper limit inside and intersection inside lower
    space, fam = line_grid5
    chain = [
        PointSet.from_indices(space, range(0, 8)),
        PointSet.from_indices(space, range(0, 5)),
        PointSet.from_indices(space, range(0, 3)),
        PointSet.from_indices(space, range(0, 3)),
    ]
    F = PointSet.from_indices(space, range(0, 3))
    seq = SetSequence(tuple(chain), preperiod=3, period=1)
    lim = kuratowski_limits(fam, seq, fam.m)
    assert lim.LS.issubset(F)
    assert F.issubset(lim.LI)


def test_hausdorff_converges_constant(line_grid5):
    space, fam = line_grid5
    F = PointSet.from_indices(space, [1, 2])
    seq = SetSequence((F, F), preperiod=0, period=1)
    assert hausdorff_converges(fam, seq, F, fam.m).attained


def test_hausdorff_attainment_grows_with_depth(line_grid5):
    space, fam = line_grid5
    i0 = space.snap((0.0,))
    xs = [0.5, 0.3, 0.1, 0.0, 0.0]
    terms = tuple(
        PointSet.from_indices(space, sorted({i0, space.snap((v,))})) for v in xs
    )
    target = PointSet.singleton(space, i0)
    seq = SetSequence(terms, preperiod=4, period=1)
    first = []
    for depth in range(1, fam.m + 1):
        diag = hausdorff_converges(fam, seq, target, depth)
        assert diag.attained
        first.append(diag.first_index())
    assert first == sorted(first)
    assert first[-1] > first[0]


def test_kuratowski_iff_hausdorff_periodic(line_grid5):
    space, fam = line_grid5
    rng = np.random.default_rng(11)
    for _ in range(60):
        per = int(rng.integers(1, 4))
        pre = int(rng.integers(0, 3))
        pool = [
            PointSet.from_indices(space, sorted(set(rng.integers(0, space.n, size=3).tolist())))
            for _ in range(3)
        ]
        cycle = [pool[int(rng.integers(0, 3))] for _ in range(per)]
        terms = [pool[int(rng.integers(0, 3))] for _ in range(pre)] + cycle * 2
        seq = SetSequence(tuple(terms), preperiod=pre, period=per)
        lim = kuratowski_limits(fam, seq, fam.m)
        conv = hausdorff_converges(fam, seq, lim.LS, fam.m)
        assert (lim.LS == lim.LI) == conv.attained


def test_included_sequences_force_inclusion(line_grid5):
    # termwise-contained convergent sequences have included limits
    space, fam = line_grid5
    F = PointSet.from_indices(space, [1, 2])
    G = PointSet.from_indices(space, [1, 2, 3])
    fs = SetSequence((F, F, F), preperiod=0, period=1)
    gs = SetSequence((G, G, G), preperiod=0, period=1)
    assert hausdorff_converges(fam, fs, F, fam.m).attained
    assert hausdorff_converges(fam, gs, G, fam.m).attained
    # termwise F_n inside G_n with both converging forces F inside G
    assert F.issubset(G)


def test_meeting_a_compact_set_persists(line_grid5):
    space, fam = line_grid5
    B = PointSet.from_indices(space, [4, 5])
    terms = tuple(PointSet.from_indices(space, [5, i]) for i in (9, 8, 7, 7))
    seq = SetSequence(terms, preperiod=3, period=1)
    K = PointSet.from_indices(space, [5, 7])
    assert hausdorff_converges(fam, seq, K, fam.m).attained
    assert all((t.mask & B.mask).any() for t in terms)
    assert (K.mask & B.mask).any()


def test_cantor_kuratowski_finite(line_grid5):
    # every decreasing sequence meets its nonempty intersection in the limit
    space, fam = line_grid5
    rng = np.random.default_rng(4)
    for _ in range(20):
        top = sorted(set(rng.integers(0, space.n, size=6).tolist()))
        chain = [list(top)]
        while len(chain[-1]) > 1:
            nxt = chain[-1][: max(1, len(chain[-1]) - int(rng.integers(1, 3)))]
            chain.append(nxt)
        terms = tuple(PointSet.from_indices(space, c) for c in chain) + (
            PointSet.from_indices(space, chain[-1]),
        )
        seq = SetSequence(terms, preperiod=len(chain) - 1, period=1)
        inter = terms[0]
        for t in terms[1:]:
            inter = inter & t
        assert not inter.is_empty
        assert hausdorff_converges(fam, seq, inter, fam.m).attained
