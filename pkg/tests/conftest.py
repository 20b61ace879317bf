"""Shared fixtures and brute-force oracles.

The oracles evaluate definitions directly (explicit member scans, full
center scans) and never share code with the library paths they check.
"""

import numpy as np
import pytest

from hyperdyn import (
    GridSpec,
    PointSet,
    build_eps_chain,
    build_space,
)
from hyperdyn.scenarios import random_instance


@pytest.fixture(scope="session")
def line_grid():
    """The 11-point segment 0.0..1.0 with the 4-level halving chain."""
    space = build_space(GridSpec(lows=(0.0,), highs=(1.0,), resolution=0.1))
    family = build_eps_chain(space, eps1=0.8, m=4)
    return space, family


@pytest.fixture(scope="session")
def line_grid5():
    """Line grid with a 5-level chain (finest level is singletons)."""
    space = build_space(GridSpec(lows=(0.0,), highs=(1.0,), resolution=0.1))
    family = build_eps_chain(space, eps1=1.6, m=5)
    return space, family


@pytest.fixture(scope="session")
def small_instances():
    """A few deterministic random instances for exhaustive checks."""
    out = []
    for seed, n, c in ((0, 4, 3), (1, 5, 3), (2, 6, 4), (3, 3, 2), (7, 6, 3)):
        out.append(random_instance(seed, n, c))
    return out


def all_nonempty_subsets(space):
    return [
        PointSet.from_indices(space, [i for i in range(space.n) if bits >> i & 1])
        for bits in range(1, 1 << space.n)
    ]


# -- oracles -----------------------------------------------------------------


def oracle_star_mask(members, mask):
    """Union of explicit members meeting the mask, by direct scan."""
    out = np.zeros_like(mask)
    for row in members:
        if (row & mask).any():
            out |= row
    return out


def oracle_rho_mask(family, x, y):
    """Definition scan: levels whose star at x contains y."""
    bits = 0
    for k in range(1, family.m + 1):
        members = family.covering(k).materialize()
        one = np.zeros(family.space.n, dtype=bool)
        one[x] = True
        if oracle_star_mask(members, one)[y]:
            bits |= 1 << (k - 1)
    return bits


def oracle_minmax(space, x, y):
    """Full scan of min_z max(d(z,x), d(z,y)) over every candidate center."""
    best = np.inf
    for z in range(space.n):
        m = max(space.distance(z, x), space.distance(z, y))
        best = min(best, m)
    return best


def oracle_one_sided_mask(family, A, B):
    """Definition: meet over b in B of the union over a in A of rho(b, a)."""
    out = family.full_mask
    for b in B.indices():
        acc = 0
        for a in A.indices():
            acc |= oracle_rho_mask(family, int(b), int(a))
        out &= acc
    return out


def oracle_rho_H_mask(family, A, B):
    return oracle_one_sided_mask(family, A, B) & oracle_one_sided_mask(family, B, A)


def oracle_diameter_mask(family, Y):
    out = family.full_mask
    ids = Y.indices()
    for i in ids:
        for j in ids:
            out &= oracle_rho_mask(family, int(i), int(j))
    return out


def oracle_shift1_mask(family, mask):
    """One double-refinement step per the definition, family intermediates."""
    from hyperdyn.coverings import double_refines

    out = 0
    for b in range(family.m):
        for a in range(family.m):
            if mask >> a & 1 and double_refines(family.coverings[a], family.coverings[b]):
                out |= 1 << b
                break
    return out


def oracle_min_star_cover(family, Y, level):
    """Minimal number of point stars covering Y, by exhaustive search."""
    import itertools

    ids = [int(i) for i in Y.indices()]
    stars = []
    for z in range(family.space.n):
        s = family.point_star_mask(z, level)
        cover = frozenset(i for i in ids if s[i])
        if cover:
            stars.append(cover)
    stars = sorted(set(stars), key=sorted)
    target = set(ids)
    for count in range(1, len(ids) + 1):
        for combo in itertools.combinations(stars, count):
            if set().union(*combo) >= target:
                return count
    return len(ids)
