import numpy as np
import pytest

from hyperdyn import (
    UsageError,
    build_scenario,
    random_instance,
    scenario_contraction,
    scenario_coset,
    scenario_multitime,
    validate_admissible,
)
from hyperdyn.dynamics import limit_L, orbit_K


def test_random_instance_deterministic():
    s1, f1 = random_instance(42, 6, 3)
    s2, f2 = random_instance(42, 6, 3)
    assert np.array_equal(s1.coords, s2.coords)
    for a, b in zip(f1.coverings, f2.coverings):
        assert np.array_equal(a.materialize(), b.materialize())


def test_random_instance_minimal_size():
    space, fam = random_instance(0, 2, 2)
    assert space.n == 2
    assert validate_admissible(fam).ok


def test_random_instances_always_validate():
    for seed in range(12):
        _, fam = random_instance(seed, 5, 3)
        assert validate_admissible(fam).ok


def test_random_instance_bounds():
    with pytest.raises(UsageError):
        random_instance(0, 1, 2)
    with pytest.raises(UsageError):
        random_instance(0, 4, 9)


def test_multitime_segment_ground_truth():
    sc = scenario_multitime()
    seg = sc.ground_truth["segment_cells"](1.0, 1.0)
    ys = sc.space.coords[seg.indices()][:, 1]
    assert ys.min() == 0.0
    assert ys.max() == pytest.approx(0.5)
    assert (sc.space.coords[seg.indices()][:, 0] == 0.0).all()


def test_multitime_point_degenerate_segment():
    sc = scenario_multitime()
    seg = sc.ground_truth["segment_cells"](1.0, 0.0)
    assert [tuple(c) for c in sc.space.coords[seg.indices()]] == [(0.0, 0.0)]


def test_multitime_rebuild_deterministic():
    a = scenario_multitime()
    b = scenario_multitime()
    assert np.array_equal(a.action.backend.table, b.action.backend.table)


def test_contraction_margin_constant():
    sc = scenario_contraction()
    delta = sc.ground_truth["delta_of_eps"](0.2)
    assert delta == pytest.approx(0.05)


def test_contraction_fixed_point_is_limit():
    sc = scenario_contraction()
    p_cell = sc.ground_truth["limit_cell"]
    res = limit_L(sc.action, p_cell)
    assert list(res.set.indices()) == [p_cell]


def test_coset_orbits_are_cosets():
    sc = scenario_coset()
    ct = sc.ground_truth["coset_of"]
    for g in (0, 17, 119, 255):
        assert orbit_K(sc.action, 1, g) == ct(g)


def test_coset_requires_divisibility():
    with pytest.raises(UsageError):
        scenario_coset(n=360, subgroup_order=7)


def test_builder_registry():
    sc = build_scenario("coset", {"n": 12, "subgroup_order": 3})
    assert sc.space.n == 12
    with pytest.raises(UsageError):
        build_scenario("nope")


def test_scenario_attractor_invariance():
    # declared attractors stay invariant under the sampled maps
    sc = scenario_multitime()
    seg = sc.ground_truth["segment_cells"](1.0, 1.0)
    img = sc.action.image_mask(2, seg.mask)
    star1 = sc.family.star_mask(seg.mask, 3)
    assert (~img | star1).all()
