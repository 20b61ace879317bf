import json
import os

import pytest

from hyperdyn.cli import main


def write_cfg(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


LINE_GRID_SCENARIO = {
    "explicit": {
        "space": {"grid": {"lows": [0.0], "highs": [1.0], "resolution": 0.1}},
        "coverings": [],
        "eps_chain": {"eps1": 0.8, "m": 4},
    }
}


def small_multitime(depth=3):
    return {
        "builtin": "multitime",
        "params": {
            "h": 0.1,
            "s_max": 6.0,
            "t_max": 2.0,
            "depth": depth,
            "lattice_step": 0.5,
        },
    }


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "bad.json", {"scenario": LINE_GRID_SCENARIO, "bogus": 1})
    assert main(["hyper", "--config", cfg]) == 2
    assert "schema violation" in capsys.readouterr().err


def test_missing_points_is_usage_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "c.json", {"scenario": small_multitime()})
    assert main(["limits", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_bad_theorem_name_rejected(tmp_path):
    cfg = write_cfg(
        tmp_path, "v.json", {"scenario": LINE_GRID_SCENARIO, "theorems": ["T99"]}
    )
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_corrupted_family_exits_2(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "corrupt.json",
        {
            "scenario": {
                "explicit": {
                    "space": {
                        "coords": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
                    },
                    "coverings": [[[0, 1], [2]], [[0], [1, 2]]],
                }
            },
            "theorems": ["PK_KP"],
        },
    )
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "validation" in capsys.readouterr().err


def test_hyper_equal_sets_full_family(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "h.json",
        {
            "scenario": LINE_GRID_SCENARIO,
            "sets": {"A": {"indices": [0, 3]}, "B": {"indices": [0, 3]}},
        },
    )
    assert main(["hyper", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "threshold 4 (full family)" in out


def test_hyper_line_example_threshold(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "h2.json",
        {
            "scenario": LINE_GRID_SCENARIO,
            "sets": {"A": {"indices": [0]}, "B": {"indices": [0, 3]}},
        },
    )
    assert main(["hyper", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "rho_H: threshold 2, eps = 0.4" in out


def test_hyper_sequence_mode(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "seq.json",
        {
            "scenario": LINE_GRID_SCENARIO,
            "sequence": {
                "terms": [{"indices": [0]}, {"indices": [9]}, {"indices": [0]}, {"indices": [9]}],
                "preperiod": 0,
                "period": 2,
            },
        },
    )
    assert main(["hyper", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "LS: [0, 9]" in out
    assert "LI: []" in out


def test_limits_outputs_and_determinism(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "lim.json",
        {
            "scenario": small_multitime(),
            "points": {"coords": [[1.0, 1.0], [0.5, 0.0]]},
            "levels": {"depth": 3},
        },
    )
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["limits", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["limits", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("limits.json", "limits.csv"):
        assert read_bytes(out1 / name) == read_bytes(out2 / name)
    data = json.loads(read_bytes(out1 / "limits.json"))
    assert len(data["points"]) == 2
    assert data["points"][0]["limit"]


def test_continuity_outputs(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "cont.json",
        {
            "scenario": small_multitime(),
            "points": {"coords": [[0.5, 0.5]]},
            "levels": {"targets": [2]},
        },
    )
    assert main(["continuity", "--config", cfg, "--out", str(tmp_path)]) == 0
    data = json.loads(read_bytes(tmp_path / "continuity.json"))
    assert data["rows"][0]["continuous"] in (True, False)
    assert "continuous" in capsys.readouterr().out


def test_verify_runs_green(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "ver.json",
        {
            "scenario": small_multitime(),
            "theorems": ["KA_LSC", "T1"],
            "corpus": {"seeds": [0, 1], "n_points": 4, "n_coverings": 3},
        },
    )
    code = main(["verify", "--config", cfg, "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0, out
    data = json.loads(read_bytes(tmp_path / "verify.json"))
    assert {t["name"] for t in data["theorems"]} == {"KA_LSC", "T1"}


def test_jobs_flag_validated(tmp_path):
    cfg = write_cfg(tmp_path, "j.json", {"scenario": small_multitime()})
    assert main(["limits", "--config", cfg, "--out", str(tmp_path), "--jobs", "0"]) == 2
