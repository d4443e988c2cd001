import json

import numpy as np
import pytest

from conftest import config_path
from wkam import cli
from wkam import experiments as ex
from wkam.errors import ConfigInvalid

BASE = {
    "kind": "alpha",
    "models": {"H": {"family": "pendulum", "params": {"A": 1.0}}},
    "grids": [[32, 8]],
    "operator": {"vmax": 3.0},
    "verification": {"expected": 1.0, "n_periods": 80, "burn_in": 30},
    "seed": 0,
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda c: c.pop("grids"), "grids"),
        (lambda c: c.pop("models"), "models"),
        (lambda c: c.update(kind="nope"), "kind"),
        (lambda c: c.update(grids=[[32, 8], [16, 8]]), "grids[1]"),
        (lambda c: c.update(grids=[[4, 4]]), "grids[0]"),
        (lambda c: c.update(grids=[[32]]), "grids[0]"),
        (lambda c: c.update(tolerances={"rel": -1}), "tolerances.rel"),
        (lambda c: c["models"].update(H={"family": "unknown"}), "models.H"),
        (lambda c: c.update(operator={"vmax": 0.1}), "operator"),
        (lambda c: c.update(models={"H1": {"family": "free"}}), "models.H"),
    ],
)
def test_validation_names_the_offending_path(mutate, path):
    cfg = json.loads(json.dumps(BASE))
    mutate(cfg)
    with pytest.raises(ConfigInvalid) as info:
        ex.validate_config(cfg)
    assert info.value.path == path


def test_pair_kinds_need_both_models():
    cfg = dict(BASE, kind="theorem1")
    with pytest.raises(ConfigInvalid, match="H1"):
        ex.validate_config(cfg)


def test_missing_grids_exit_code_and_message(tmp_path, capsys):
    cfg = dict(BASE)
    cfg.pop("grids")
    code = cli.main(["alpha", "--config", write(tmp_path, cfg)])
    assert code == 2
    assert "missing required key 'grids'" in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    assert cli.main(["alpha", "--config", str(tmp_path / "absent.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 2


def test_pass_exit_code_and_report(tmp_path, capsys):
    code = cli.main(["alpha", "--config", write(tmp_path, BASE), "--out", str(tmp_path / "out")])
    out = capsys.readouterr().out
    assert code == 0
    assert "[PASS] |karp - growth|" in out
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["passed"] and rep["kind"] == "alpha"
    for c in rep["criteria"]:
        assert {"measured", "threshold", "grid", "passed"} <= set(c)
    assert rep["provenance"]["backend"] in ("numba", "numpy")
    assert (tmp_path / "out" / "alpha_32x8.json").exists()


def test_failing_criterion_exit_code(tmp_path, capsys):
    cfg = dict(BASE, verification=dict(BASE["verification"], expected=2.0))
    assert cli.main(["run", "--config", write(tmp_path, cfg)]) == 1
    assert "[FAIL] |alpha_karp - expected|" in capsys.readouterr().out


def test_solver_error_exit_code(tmp_path, capsys):
    cfg = {
        "kind": "weak-kam",
        "models": {"H": {"family": "forced_pendulum"}},
        "grids": [[64, 16]],
        "verification": {"window": 2, "burn_in": 1, "max_iters": 2, "fixed_point_tol": 1e-300},
    }
    assert cli.main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "out")]) == 3
    assert "NoConvergence" in capsys.readouterr().err
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["aborted"] and not rep["passed"]
    assert rep["error"]["type"] == "NoConvergence"
    assert rep["partial_artifacts"] == []


def test_bad_seed(tmp_path):
    assert cli.main(["alpha", "--config", write(tmp_path, BASE), "--seed", "-1"]) == 2


def test_verb_overrides_kind(tmp_path, capsys):
    cfg = {"kind": "alpha", "models": {"H1": {"family": "pair_d1.H1"}, "H2": {"family": "pair_d1.H2"}}, "grids": []}
    assert cli.main(["pair-check", "--config", write(tmp_path, cfg), "-q"]) == 0
    assert capsys.readouterr().out == ""


def test_reports_deterministic_apart_from_timestamp(tmp_path):
    cfg = {
        "kind": "theorem1",
        "models": {"H1": {"family": "pair_d1.H1"}, "H2": {"family": "pair_d1.H2"}},
        "grids": [[16, 4], [32, 8]],
        "verification": {"probes": 3},
        "seed": 7,
    }
    path = write(tmp_path, cfg)
    outs = []
    for i in range(2):
        cli.main(["theorem1", "--config", path, "--out", str(tmp_path / f"o{i}"), "-q"])
        rep = json.loads((tmp_path / f"o{i}" / "report.json").read_text())
        assert "timestamp" in rep
        rep.pop("timestamp")
        outs.append(json.dumps(rep, sort_keys=True))
    assert outs[0] == outs[1]
    # a different seed changes the probes, hence the measured defects
    cli.main(["theorem1", "--config", path, "--out", str(tmp_path / "o2"), "--seed", "8", "-q"])
    rep = json.loads((tmp_path / "o2" / "report.json").read_text())
    rep.pop("timestamp")
    assert rep["provenance"]["seed"] == 8
    assert json.dumps(rep, sort_keys=True) != outs[0]


def test_golden_configs_validate():
    import glob
    import os

    paths = sorted(glob.glob(os.path.join(os.path.dirname(config_path("x")), "*.json")))
    assert len(paths) == 10
    kinds = {ex.load_config(p).kind for p in paths}
    assert kinds == set(ex.KINDS)


@pytest.mark.parametrize(
    "values, expected",
    [([4.0, 2.0, 1.0], [2.0, 2.0]), ([0.0, 0.0], [None]), ([1e-13, 1e-14], [None]), ([1.0, 0.0], [float("inf")])],
)
def test_refinement_ratios(values, expected):
    assert ex.refinement_ratios(values) == expected


def test_floor_pairs_are_reported_not_dropped():
    rep = ex.Report("theorem3")
    ex.check_ratios(rep, "sup |B1 - B2|", [0.0, 1e-14], [(16, 4), (32, 8)], 1.5)
    assert len(rep.criteria) == 1
    assert "roundoff floor" in rep.criteria[0]["name"] and rep.passed


def test_report_lines_carry_value_threshold_grid():
    rep = ex.Report("x")
    rep.check("a", 0.5, 1.0, "<=", (8, 4), C=0.05)
    rep.check("b", 15.0, [12, 20], "in")
    rep.check("c", np.float64(0.1), 1.0, ">=", (8, 4))
    lines = rep.lines()
    assert lines[0] == "[PASS] a: 0.5 <= 1.0 grid=(8, 4)"
    assert lines[1].startswith("[PASS] b: 15.0 in [12, 20]")
    assert lines[2].startswith("[FAIL] c")
    assert not rep.passed
    d = json.loads(rep.to_json(timestamp=False))
    assert d["criteria"][0]["C"] == 0.05 and "timestamp" not in d


def test_probe_functions_seeded():
    from wkam.grid import TorusGrid

    g = TorusGrid(16, 4)
    a = ex.probe_functions(g, np.random.default_rng(3), 2)
    b = ex.probe_functions(g, np.random.default_rng(3), 2)
    np.testing.assert_array_equal(a, b)
    assert max(np.abs(u).max() for u in a) <= 8.0
