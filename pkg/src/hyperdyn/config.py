"""Run-configuration loading: strict schema validation and object building."""

import json
from importlib import resources

import jsonschema
import numpy as np

from .coverings import ExplicitFamily, build_eps_chain, validate_admissible
from .dynamics import SemigroupSample, TableAction
from .errors import FamilyValidationError, UsageError
from .scenarios import Scenario, build_scenario
from .sets import PointSet
from .space import GridSpec, Space, build_space, space_from_table


def load_schema():
    with resources.files("hyperdyn").joinpath("config_schema.json").open("rb") as f:
        return json.load(f)


def load_config(path):
    try:
        with open(path, "rb") as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = "; ".join(
            f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
            for e in errors[:5]
        )
        raise UsageError(f"config schema violation: {msgs}")
    return cfg


def _build_explicit_space(spec):
    if "grid" in spec:
        g = spec["grid"]
        return build_space(
            GridSpec(
                lows=tuple(g["lows"]),
                highs=tuple(g["highs"]),
                resolution=g["resolution"],
                metric=g.get("metric", "euclidean"),
                periods=tuple(g["periods"]) if "periods" in g else None,
            )
        )
    if "metric_table" in spec:
        coords = np.asarray(spec["coords"], dtype=float) if "coords" in spec else None
        return space_from_table(np.asarray(spec["metric_table"], dtype=float), coords)
    if "coords" in spec:
        return Space(np.asarray(spec["coords"], dtype=float), kind="euclidean")
    raise UsageError("explicit space needs grid, coords, or metric_table")


def build_scenario_from_config(cfg) -> Scenario:
    sc = cfg.get("scenario")
    if not sc:
        raise UsageError("config needs a scenario section")
    if "builtin" in sc:
        return build_scenario(sc["builtin"], sc.get("params"))
    if "explicit" not in sc:
        raise UsageError("scenario needs builtin or explicit")
    spec = sc["explicit"]
    space = _build_explicit_space(spec["space"])

    if "eps_chain" in spec:
        family = build_eps_chain(space, spec["eps_chain"]["eps1"], spec["eps_chain"]["m"])
    else:
        covs = []
        for members in spec["coverings"]:
            mat = np.zeros((len(members), space.n), dtype=bool)
            for r, idxs in enumerate(members):
                mat[r, np.asarray(idxs, dtype=int)] = True
            covs.append(mat)
        family = ExplicitFamily(space, covs)
        report = validate_admissible(family)
        if not report.ok:
            raise FamilyValidationError(report)

    if "action_table" in spec:
        table = np.asarray(spec["action_table"], dtype=np.int64)
        if table.shape[1] != space.n:
            raise UsageError("action table width must match the space")
        filt = spec.get("filter_levels") or [list(range(table.shape[0]))]
        action = SemigroupSample(space, family, TableAction(table), filt,
                                 sampled=True, name="explicit")
    else:
        table = np.arange(space.n, dtype=np.int64)[None, :]
        action = SemigroupSample(space, family, TableAction(table), [[0]],
                                 sampled=False, name="identity")
    meta = dict(spec.get("metadata", {}))
    return Scenario(
        name="explicit",
        space=space,
        family=family,
        action=action,
        metadata=meta,
        sample_points=tuple(range(min(space.n, 8))),
        exact_target_levels=frozenset(range(1, family.m + 1)),
    )


def resolve_points(cfg, scenario):
    pts = cfg.get("points", {})
    out = []
    if "indices" in pts:
        for i in pts["indices"]:
            if not 0 <= int(i) < scenario.space.n:
                raise UsageError(f"point index {i} out of range")
            out.append(int(i))
    if "coords" in pts:
        for c in pts["coords"]:
            out.append(int(scenario.space.snap(tuple(c))))
    if "sample" in pts:
        out.extend(scenario.sample_points[: int(pts["sample"])])
    if not out:
        raise UsageError("no evaluation points given")
    return out


def resolve_set(desc, space) -> PointSet:
    if "indices" in desc:
        return PointSet.from_indices(space, desc["indices"])
    if "ball" in desc:
        c = np.asarray(desc["ball"]["center"], dtype=float)
        r = float(desc["ball"]["radius"])
        d = np.sqrt(((space.coords - c) ** 2).sum(axis=1))
        return PointSet(space, d <= r)
    if "box" in desc:
        lo = np.asarray(desc["box"]["lows"], dtype=float)
        hi = np.asarray(desc["box"]["highs"], dtype=float)
        ok = np.all((space.coords >= lo) & (space.coords <= hi), axis=1)
        return PointSet(space, ok)
    if "radius_band" in desc:
        r = float(desc["radius_band"]["radius"])
        tol = float(desc["radius_band"]["tol"])
        d = np.sqrt((space.coords**2).sum(axis=1))
        return PointSet(space, np.abs(d - r) <= tol)
    raise UsageError("empty set descriptor")
