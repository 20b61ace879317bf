"""Command-line front end.

Subcommands load a JSON config (strictly schema-checked), run the
requested operators, and write machine-readable reports.  Outputs are
byte-deterministic for a fixed config: ordering is explicit everywhere
and floats are serialized via repr / 9 significant digits.

Exit codes: 0 success, 2 configuration or usage error, 3 domain error
raised by the dynamics.
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import (
    build_scenario_from_config,
    load_config,
    resolve_points,
    resolve_set,
)
from .continuity import continuity_report, map_limit, verify_theorem
from .dynamics import limit_L, omega_set, prolongational_J
from .errors import DomainError, HyperdynError, UsageError
from .hyperspace import (
    SetSequence,
    diameter,
    hausdorff_converges,
    kuratowski_limits,
    noncompactness,
    rho_H,
)
from .scenarios import random_instance
from .sets import PointSet


def _dump_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=2)
        f.write("\n")


def _sig9(v):
    return format(float(v), ".9g")


def _upset_info(upset):
    fam = upset.family
    info = {"threshold": upset.threshold, "levels": upset.levels(), "full": upset.is_full}
    if hasattr(fam, "eps_of_threshold"):
        eps = fam.eps_of_threshold(upset.threshold)
        info["eps"] = None if eps is None else float(eps)
    return info


def cmd_limits(cfg, outdir):
    scenario = build_scenario_from_config(cfg)
    points = resolve_points(cfg, scenario)
    depth = cfg.get("levels", {}).get("depth", scenario.family.m)
    space = scenario.space
    records = []
    csv_rows = []
    for x in points:
        res = limit_L(scenario.action, x)
        jres = prolongational_J(scenario.action, x, depth)
        om = omega_set(scenario.action, PointSet.singleton(space, x))
        records.append(
            {
                "point": int(x),
                "coords": [float(c) for c in space.coords[x]],
                "limit": [int(i) for i in res.set.indices()],
                "prolongational": [int(i) for i in jres.set.indices()],
                "omega": [int(i) for i in om.indices()],
                "diagnostic": res.diagnostic.to_dict(),
                "diagnostic_prolongational": jres.diagnostic.to_dict(),
            }
        )
        for i in res.set.indices():
            csv_rows.append((int(x), space.coords[x], int(i), space.coords[i]))
    _dump_json(os.path.join(outdir, "limits.json"), {"points": records})
    dim = space.dim
    header = (
        ["point"]
        + [f"p{a}" for a in range(dim)]
        + ["member"]
        + [f"m{a}" for a in range(dim)]
    )
    with open(os.path.join(outdir, "limits.csv"), "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for pid, pc, mid, mc in csv_rows:
            vals = [str(pid)] + [_sig9(v) for v in pc] + [str(mid)] + [_sig9(v) for v in mc]
            f.write(",".join(vals) + "\n")
    print(f"limits: {len(records)} points -> {outdir}/limits.json, limits.csv")
    return 0


def cmd_continuity(cfg, outdir):
    scenario = build_scenario_from_config(cfg)
    points = resolve_points(cfg, scenario)
    levels = cfg.get("levels", {}).get("targets")
    if not levels:
        levels = sorted(scenario.exact_target_levels)
    L = map_limit(scenario.action)
    report = continuity_report(scenario.family, L, points, levels)
    rows = list(report.rows())
    _dump_json(
        os.path.join(outdir, "continuity.json"),
        {"map": report.map_name, "levels": list(levels), "rows": rows},
    )
    print(f"{'point':>8} {'level':>5} {'usc':>5} {'lsc':>5} {'continuous':>10}")
    for r in rows:
        print(
            f"{r['point']:>8} {r['level']:>5} {str(r['usc']):>5} "
            f"{str(r['lsc']):>5} {str(r['continuous']):>10}"
        )
    return 0


def _corpus_property_suite(cfg, seed):
    """Brute-force identities of the two-sided star distance on random
    instances; both sides computed from the definitions."""
    corpus = cfg.get("corpus", {})
    seeds = corpus.get("seeds", list(range(seed, seed + 3)))
    n_points = corpus.get("n_points", 5)
    n_cov = corpus.get("n_coverings", 3)
    failures = []
    for s in seeds:
        space, family = random_instance(s, n_points, n_cov)
        sets = [
            PointSet.from_indices(space, [i for i in range(space.n) if bits >> i & 1])
            for bits in range(1, 1 << space.n)
        ]
        for A in sets[:: max(1, len(sets) // 12)]:
            for B in sets[:: max(1, len(sets) // 12)]:
                ab = rho_H(family, A, B)
                ba = rho_H(family, B, A)
                if ab.mask != ba.mask:
                    failures.append({"seed": s, "check": "symmetry"})
                if (ab.is_full) != (A == B):
                    failures.append({"seed": s, "check": "identity"})
    return {"seeds": list(seeds), "failures": failures}


def cmd_verify(cfg, outdir, seed):
    scenario = build_scenario_from_config(cfg)
    theorems = cfg.get("theorems")
    if not theorems:
        raise UsageError("verify needs a theorems list")
    results = []
    exact_fail = False
    for name in theorems:
        rep = verify_theorem(name, scenario)
        results.append(rep.to_dict())
        if not rep.passed:
            exact_fail = True
    suite = _corpus_property_suite(cfg, seed)
    if suite["failures"]:
        exact_fail = True
    _dump_json(
        os.path.join(outdir, "verify.json"),
        {"theorems": results, "property_suite": suite},
    )
    for r in results:
        status = "pass" if r["passed"] else "FAIL"
        extra = "" if r["hypotheses_met"] else " (hypotheses unmet; vacuous)"
        print(f"{r['name']:>10} on {r['scenario']}: {status}{extra}")
    print(f"property suite: {'pass' if not suite['failures'] else 'FAIL'}")
    return 1 if exact_fail else 0


def cmd_hyper(cfg, outdir):
    scenario = build_scenario_from_config(cfg)
    fam = scenario.family
    space = scenario.space
    seq_cfg = cfg.get("sequence")
    if seq_cfg is not None:
        terms = tuple(resolve_set(d, space) for d in seq_cfg["terms"])
        seq = SetSequence(
            terms,
            preperiod=seq_cfg.get("preperiod"),
            period=seq_cfg.get("period"),
        )
        lim = kuratowski_limits(fam, seq, fam.m)
        print(f"LS: {sorted(int(i) for i in lim.LS.indices())}")
        print(f"LI: {sorted(int(i) for i in lim.LI.indices())}")
        if "target" in seq_cfg:
            target = resolve_set(seq_cfg["target"], space)
            diag = hausdorff_converges(fam, seq, target, fam.m)
            print(f"hausdorff attained: {diag.attained} per-level {list(diag.per_level)}")
        return 0
    sets_cfg = cfg.get("sets")
    if not sets_cfg or "A" not in sets_cfg or "B" not in sets_cfg:
        raise UsageError("hyper needs sets.A and sets.B (or a sequence)")
    A = resolve_set(sets_cfg["A"], space)
    B = resolve_set(sets_cfg["B"], space)
    if A.is_empty or B.is_empty:
        raise UsageError("set descriptors resolved to empty sets")
    rh = rho_H(fam, A, B)
    info = _upset_info(rh)
    if rh.is_full:
        print(f"rho_H: threshold {rh.threshold} (full family)")
    else:
        eps = info.get("eps")
        eps_str = f", eps = {eps}" if eps is not None else ""
        print(f"rho_H: threshold {rh.threshold}{eps_str}")
    for label, Y in (("A", A), ("B", B)):
        d = diameter(fam, Y)
        print(f"diameter({label}): threshold {d.threshold}")
    nc_cfg = cfg.get("noncompactness", {})
    level = nc_cfg.get("level", 1)
    budget = nc_cfg.get("budget", 3)
    for label, Y in (("A", A), ("B", B)):
        prof = noncompactness(fam, Y, level, budget)
        print(
            f"noncompactness({label}) level {level} budget {budget}: "
            f"alpha_count {prof.alpha_count} gamma_count {prof.gamma_count}"
            f"{'' if prof.exact else ' (greedy upper bounds)'}"
        )
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hyperdyn",
        description="covering-based hyperspace calculus and set-valued dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("limits", "continuity", "verify", "hyper"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker pool size (reserved; execution is sequential)")
        p.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "limits":
            return cmd_limits(cfg, args.out)
        if args.command == "continuity":
            return cmd_continuity(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args.seed)
        return cmd_hyper(cfg, args.out)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except HyperdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
