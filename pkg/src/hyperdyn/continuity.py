"""Semicontinuity checkers for set-valued maps, and the theorem harness.

"For any net approaching x" collapses, on a finite grid, to "for every
grid point in a star around x".  Witness searches use the finest covering
level whose star still contains a second point: star containment is
monotone across levels, so passing there yields a witness and failing
there rules every level out.  Singleton stars are skipped as vacuous.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    is_eventually_stable,
    is_minimal,
    is_stable,
    limit_L,
    limit_set_only,
    orbit_K,
    prolongation_D,
    prolongational_J,
    prolongational_set_only,
)
from .errors import UsageError
from .hyperspace import SetSequence, hausdorff_converges, kuratowski_limits, rho_H
from .sets import PointSet, require_nonempty


class SetValuedMap:
    """Point index -> nonempty PointSet, with per-point memoization."""

    def __init__(self, space, evaluator, name="F"):
        self.space = space
        self.evaluator = evaluator
        self.name = name
        self._memo = {}

    def __call__(self, x) -> PointSet:
        x = int(x)
        out = self._memo.get(x)
        if out is None:
            out = self.evaluator(x)
            require_nonempty(out, f"{self.name}({x})")
            self._memo[x] = out
        return out


def map_orbit(action, filter_level, name=None):
    return SetValuedMap(
        action.space,
        lambda x: orbit_K(action, filter_level, x),
        name or f"K_A{filter_level}",
    )


def map_limit(action, name="L_F"):
    return SetValuedMap(action.space, lambda x: limit_set_only(action, x), name)


def map_prolongational(action, depth, name="J_F"):
    return SetValuedMap(action.space, lambda x: prolongational_J(action, x, depth).set, name)


@dataclass(frozen=True)
class SemicontinuityResult:
    kind: str  # "usc" | "lsc"
    point: int
    target_level: int
    witness_level: int = None
    counterexample: tuple = None  # (nearby point, offending value point)
    degenerate: bool = False  # no informative star level existed

    @property
    def holds(self):
        return self.counterexample is None


def usc_at(family, F: SetValuedMap, x: int, target_level: int) -> SemicontinuityResult:
    """Values near x may not escape St[F(x), target]."""
    k = family.check_level(target_level)
    j = family.finest_informative_level(int(x))
    if j is None:
        return SemicontinuityResult("usc", int(x), k, witness_level=None, degenerate=True)
    target = family.star_mask(F(x).mask, k)
    for y in np.flatnonzero(family.point_star_mask(int(x), j)):
        escaped = F(int(y)).mask & ~target
        if escaped.any():
            return SemicontinuityResult(
                "usc", int(x), k,
                counterexample=(int(y), int(np.flatnonzero(escaped)[0])),
            )
    return SemicontinuityResult("usc", int(x), k, witness_level=j)


def lsc_at(family, F: SetValuedMap, x: int, target_level: int) -> SemicontinuityResult:
    """Values near x may not lose sight of any point of F(x)."""
    k = family.check_level(target_level)
    j = family.finest_informative_level(int(x))
    if j is None:
        return SemicontinuityResult("lsc", int(x), k, witness_level=None, degenerate=True)
    fx = F(int(x)).mask
    for y in np.flatnonzero(family.point_star_mask(int(x), j)):
        reach = family.star_mask(F(int(y)).mask, k)
        missed = fx & ~reach
        if missed.any():
            return SemicontinuityResult(
                "lsc", int(x), k,
                counterexample=(int(y), int(np.flatnonzero(missed)[0])),
            )
    return SemicontinuityResult("lsc", int(x), k, witness_level=j)


@dataclass(frozen=True)
class ContinuityVerdict:
    point: int
    target_level: int
    usc: SemicontinuityResult
    lsc: SemicontinuityResult

    @property
    def continuous(self):
        return self.usc.holds and self.lsc.holds


def hausdorff_continuous_at(family, F: SetValuedMap, x: int, target_level: int) -> ContinuityVerdict:
    return ContinuityVerdict(
        point=int(x),
        target_level=family.check_level(target_level),
        usc=usc_at(family, F, x, target_level),
        lsc=lsc_at(family, F, x, target_level),
    )


@dataclass
class ContinuityReport:
    map_name: str
    target_levels: tuple
    verdicts: list = field(default_factory=list)  # ContinuityVerdict

    def rows(self):
        for v in self.verdicts:
            yield {
                "point": v.point,
                "level": v.target_level,
                "usc": v.usc.holds,
                "lsc": v.lsc.holds,
                "continuous": v.continuous,
                "witness_usc": v.usc.witness_level,
                "witness_lsc": v.lsc.witness_level,
                "counterexample_usc": v.usc.counterexample,
                "counterexample_lsc": v.lsc.counterexample,
            }


def continuity_report(family, F: SetValuedMap, points, target_levels) -> ContinuityReport:
    report = ContinuityReport(map_name=F.name, target_levels=tuple(target_levels))
    for x in points:
        for k in target_levels:
            report.verdicts.append(hausdorff_continuous_at(family, F, x, k))
    return report


# ---------------------------------------------------------------------------
# theorem harness
# ---------------------------------------------------------------------------

THEOREMS = ("KA_LSC", "K_EQ", "T1", "T2", "T7", "T10", "PK_KP", "T5", "UNION_USC")


@dataclass
class TheoremCheck:
    point: object
    level: int
    lhs: bool
    rhs: bool
    approximate: bool
    detail: str = ""

    @property
    def agree(self):
        return self.lhs == self.rhs

    @property
    def implication_ok(self):
        return (not self.lhs) or self.rhs


@dataclass
class TheoremReport:
    name: str
    scenario: str
    mode: str  # "iff" | "implies" | "holds"
    checks: list = field(default_factory=list)
    hypotheses_met: bool = True
    notes: list = field(default_factory=list)

    def exact_failures(self):
        bad = []
        for c in self.checks:
            ok = c.agree if self.mode == "iff" else (c.implication_ok if self.mode == "implies" else c.rhs)
            if not ok and not c.approximate:
                bad.append(c)
        return bad

    def flagged_disagreements(self):
        out = []
        for c in self.checks:
            ok = c.agree if self.mode == "iff" else (c.implication_ok if self.mode == "implies" else c.rhs)
            if not ok and c.approximate:
                out.append(c)
        return out

    @property
    def passed(self):
        return self.hypotheses_met is False or not self.exact_failures()

    def to_dict(self):
        return {
            "name": self.name,
            "scenario": self.scenario,
            "mode": self.mode,
            "hypotheses_met": self.hypotheses_met,
            "notes": list(self.notes),
            "n_checks": len(self.checks),
            "exact_failures": [
                {"point": c.point, "level": c.level, "detail": c.detail}
                for c in self.exact_failures()
            ],
            "flagged_disagreements": [
                {"point": c.point, "level": c.level, "detail": c.detail}
                for c in self.flagged_disagreements()
            ],
            "passed": self.passed,
        }


def _is_exact_level(scenario, k):
    return k in scenario.exact_target_levels


def _subsample(ids, cap=12):
    ids = list(ids)
    if len(ids) <= cap:
        return ids
    stride = max(1, len(ids) // cap)
    return ids[::stride][:cap]


def _prefetch_stars(scenario, points):
    # trajectory-backed actions integrate these starts in one batch
    fam = scenario.family
    union = np.zeros(scenario.space.n, dtype=bool)
    for x in points:
        j = fam.finest_informative_level(int(x))
        if j is not None:
            union |= fam.point_star_mask(int(x), j)
        union[int(x)] = True
    scenario.action.prefetch(np.flatnonzero(union))


def verify_theorem(name, scenario, levels=None, points=None) -> TheoremReport:
    """Evaluate both sides of a named statement on a built scenario.

    A check fails the report only when both sides were computed without an
    approximation flag and still disagree; discretization-limited checks
    are recorded but do not fail.
    """
    if name not in THEOREMS:
        raise UsageError(f"unknown theorem name {name!r}; known: {THEOREMS}")
    fam = scenario.family
    action = scenario.action
    if levels is None:
        levels = sorted(scenario.exact_target_levels)
    if points is None:
        points = list(scenario.sample_points)
    fn = {
        "KA_LSC": _verify_ka_lsc,
        "K_EQ": _verify_k_eq,
        "T1": _verify_t1,
        "T2": _verify_t2,
        "T7": _verify_t7,
        "T10": _verify_t10,
        "PK_KP": _verify_pk_kp,
        "T5": _verify_t5,
        "UNION_USC": _verify_union_usc,
    }[name]
    return fn(scenario, fam, action, list(levels), list(points))


def _verify_ka_lsc(scenario, fam, action, levels, points):
    report = TheoremReport("KA_LSC", scenario.name, mode="holds")
    K1 = map_orbit(action, 1)
    _prefetch_stars(scenario, points)
    for x in points:
        for k in levels:
            res = lsc_at(fam, K1, x, k)
            report.checks.append(
                TheoremCheck(x, k, True, res.holds, not _is_exact_level(scenario, k),
                             detail=f"counterexample={res.counterexample}")
            )
    return report


def _verify_k_eq(scenario, fam, action, levels, points):
    # upper semicontinuity of the orbit map vs triviality of the prolongation
    report = TheoremReport("K_EQ", scenario.name, mode="iff")
    K1 = map_orbit(action, 1)
    _prefetch_stars(scenario, points)
    for x in points:
        j = fam.finest_informative_level(int(x))
        if j is None:
            continue
        for k in levels:
            lhs = usc_at(fam, K1, x, k).holds
            prol = prolongation_D(action, 1, x, star_level=j)
            target = fam.star_mask(K1(x).mask, k)
            rhs = bool(np.all(target[prol.set_at_level.mask]))
            report.checks.append(
                TheoremCheck(x, k, lhs, rhs, not _is_exact_level(scenario, k))
            )
    return report


def _verify_t1(scenario, fam, action, levels, points):
    report = TheoremReport("T1", scenario.name, mode="implies")
    K1 = map_orbit(action, 1)
    _prefetch_stars(scenario, points)
    for x in points:
        orbit = K1(x)
        probes = _subsample(orbit.indices().tolist())
        _prefetch_stars(scenario, probes)
        for k in levels:
            lhs = all(usc_at(fam, K1, int(y), k).holds for y in probes)
            rhs = is_stable(action, orbit, k).verdict
            report.checks.append(
                TheoremCheck(x, k, lhs, rhs, not _is_exact_level(scenario, k))
            )
    if scenario.metadata.get("weak_transitive"):
        report.mode = "iff"
        report.notes.append("weak transitivity holds; both directions checked")
    return report


def _verify_t2(scenario, fam, action, levels, points):
    report = TheoremReport("T2", scenario.name, mode="implies")
    maps = {i: map_orbit(action, i) for i in range(1, action.depth + 1)}
    _prefetch_stars(scenario, points)
    for x in points:
        j = fam.finest_informative_level(int(x))
        if j is None:
            continue
        for k in levels:
            lhs = all(usc_at(fam, maps[i], x, k).holds for i in maps)
            L = limit_set_only(action, x)
            J = prolongational_set_only(action, x, depth=j)
            rhs = rho_H(fam, J, L).contains_level(k)
            report.checks.append(
                TheoremCheck(x, k, lhs, rhs, not _is_exact_level(scenario, k))
            )
    return report


def _hypotheses_for(report, scenario, keys):
    meta = scenario.metadata
    missing = [k for k in keys if not meta.get(k)]
    if missing:
        report.hypotheses_met = False
        report.notes.append(f"hypotheses not met: {missing}; statement not exercised")
        return False
    return True


def _verify_t7(scenario, fam, action, levels, points):
    report = TheoremReport("T7", scenario.name, mode="iff")
    if not _hypotheses_for(report, scenario, ("locally_compact", "connected_filter_sets", "H1", "H3")):
        return report
    L = map_limit(action)
    _prefetch_stars(scenario, points)
    for x in points:
        Lx = L(x)
        probes = _subsample(Lx.indices().tolist())
        _prefetch_stars(scenario, probes)
        for k in levels:
            lhs = all(usc_at(fam, L, int(y), k).holds for y in probes)
            minimal, _ = is_minimal(action, Lx)
            rhs = minimal and is_eventually_stable(action, Lx, k).verdict
            report.checks.append(
                TheoremCheck(x, k, lhs, rhs, not _is_exact_level(scenario, k))
            )
    return report


def _verify_t10(scenario, fam, action, levels, points):
    report = TheoremReport("T10", scenario.name, mode="iff")
    if not _hypotheses_for(report, scenario, ("locally_compact", "connected_filter_sets", "H1", "H2", "H3")):
        return report
    L = map_limit(action)
    _prefetch_stars(scenario, points)
    for k in levels:
        lhs = all(hausdorff_continuous_at(fam, L, x, k).continuous for x in points)
        rhs = all(is_eventually_stable(action, L(x), k).verdict for x in points)
        report.checks.append(
            TheoremCheck("all-sampled", k, lhs, rhs, not _is_exact_level(scenario, k))
        )
    return report


def _verify_pk_kp(scenario, fam, action, levels, points):
    # Kuratowski limits agree with full-depth two-sided convergence on
    # eventually periodic sequences drawn from the sampled orbit sets
    report = TheoremReport("PK_KP", scenario.name, mode="iff")
    rng = np.random.default_rng(20240 + len(points))
    pool = [orbit_K(action, 1, int(x)) for x in points[:6]]
    pool += [PointSet.singleton(scenario.space, int(x)) for x in points[:6]]
    for trial in range(24):
        per = int(rng.integers(1, 4))
        pre = int(rng.integers(0, 3))
        cycle = [pool[int(rng.integers(0, len(pool)))] for _ in range(per)]
        terms = [pool[int(rng.integers(0, len(pool)))] for _ in range(pre)]
        terms += cycle * 2
        seq = SetSequence(tuple(terms), preperiod=pre, period=per)
        lim = kuratowski_limits(fam, seq, fam.m)
        lhs = lim.LS == lim.LI
        rhs = hausdorff_converges(fam, seq, lim.LS, fam.m).attained
        report.checks.append(TheoremCheck(f"seq{trial}", fam.m, lhs, rhs, False))
    return report


def _verify_t5(scenario, fam, action, levels, points):
    from .hyperspace import in_ball_BH, in_ball_covering, vietoris_member, vietoris_refinement

    report = TheoremReport("T5", scenario.name, mode="holds")
    space = scenario.space
    if space.n > 7:
        report.hypotheses_met = False
        report.notes.append("basic-set enumeration needs a small space")
        return report
    all_sets = [
        PointSet.from_indices(space, [i for i in range(space.n) if bits >> i & 1])
        for bits in range(1, 1 << space.n)
    ]
    for A in all_sets:
        for k in range(1, fam.m + 1):
            U = fam.covering(k)
            V = vietoris_refinement(A, U)
            ok = True
            for B in all_sets:
                if vietoris_member(B, A, U) and not in_ball_BH(fam, B, A, k):
                    ok = False
                if in_ball_covering(B, A, V) and not vietoris_member(B, A, U):
                    ok = False
            report.checks.append(TheoremCheck(tuple(A.indices().tolist()), k, True, ok, False))
    return report


def _verify_union_usc(scenario, fam, action, levels, points):
    report = TheoremReport("UNION_USC", scenario.name, mode="implies")
    L = map_limit(action)
    _prefetch_stars(scenario, points)
    anchor = int(points[0])
    const = SetValuedMap(
        scenario.space, lambda _x: orbit_K(action, 1, anchor), name="const"
    )
    union = SetValuedMap(
        scenario.space, lambda x: L(x) | const(x), name="L|const"
    )
    for x in points:
        for k in levels:
            lhs = usc_at(fam, L, x, k).holds and usc_at(fam, const, x, k).holds
            rhs = usc_at(fam, union, x, k).holds
            report.checks.append(
                TheoremCheck(x, k, lhs, rhs, not _is_exact_level(scenario, k))
            )
    return report
