import hashlib
import json

import pytest

from cutlab.cli import main

FAST = {"scenario": "flat-torus-line",
        "resolution": {"m": 64, "dt": 2e-3}}


def _write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_missing_config_and_scenario_exits_2(capsys):
    assert main(["inj"]) == 2
    assert "config" in capsys.readouterr().err


def test_unknown_scenario_exits_2(capsys):
    assert main(["inj", "--scenario", "klein-bottle"]) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_unknown_config_key_named_in_error(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, {"scenario": "flat-torus-line", "bad_key": 1})
    assert main(["inj", "--config", cfg]) == 2
    assert "bad_key" in capsys.readouterr().err


def test_missing_tau_ladder_named_in_error(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, {**FAST, "family": {"kind": "conformal"}})
    assert main(["sweep", "--config", cfg]) == 2
    assert "family.tau" in capsys.readouterr().err


def test_inj_writes_outputs_and_manifest(tmp_path):
    cfg = _write_cfg(tmp_path, FAST)
    out = tmp_path / "out"
    assert main(["inj", "--config", cfg, "--out", str(out)]) == 0
    inj = json.loads((out / "inj.json").read_text())
    assert inj["inj_direct"] == pytest.approx(0.5, abs=5e-3)
    assert inj["branch"] == "loop"
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "inj"
    assert man["verdicts"]["inj_estimators_agree"] is True
    for name, digest in man["files"].items():
        body = (out / name).read_bytes()
        assert hashlib.sha256(body).hexdigest() == digest
    header = (out / "profiles.csv").read_text().splitlines()[0]
    assert header.startswith("dir_idx,s,side,rho,focal_t")


def test_cutlocus_outputs(tmp_path):
    cfg = _write_cfg(tmp_path, {"scenario": "flat-torus-point",
                                "resolution": {"m": 64, "dt": 2e-3}})
    out = tmp_path / "out"
    assert main(["cutlocus", "--config", cfg, "--out", str(out)]) == 0
    for name in ("cut_cloud.csv", "sep_points.csv", "cutlocus.json",
                 "manifest.json"):
        assert (out / name).exists()
    rows = (out / "cut_cloud.csv").read_text().splitlines()
    assert len(rows) > 10


def test_reruns_are_byte_identical(tmp_path):
    cfg = _write_cfg(tmp_path, FAST)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["inj", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["inj", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("inj.json", "profiles.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_thread_flag_does_not_change_results(tmp_path):
    cfg = _write_cfg(tmp_path, FAST)
    out1, out2 = tmp_path / "t1", tmp_path / "t8"
    assert main(["inj", "--config", cfg, "--out", str(out1),
                 "--threads", "1"]) == 0
    assert main(["inj", "--config", cfg, "--out", str(out2),
                 "--threads", "8"]) == 0
    for name in ("inj.json", "profiles.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_validate_reports(tmp_path):
    cfg = _write_cfg(tmp_path, FAST)
    out = tmp_path / "out"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "validate.json").read_text())
    assert rep["eikonal"]["frac_below_1e2"] >= 0.95
    # flat-chart geodesics are exact, so the refinement ratio degenerates
    assert rep["refinement"]["ratio"] >= 12.0 or \
        rep["refinement"]["endpoint_err_fine"] <= 1e-12
    assert (out / "eikonal_residuals.csv").exists()


def test_validate_refinement_ratio_warped(tmp_path):
    cfg = _write_cfg(tmp_path, {"scenario": "warped-torus-line",
                                "resolution": {"m": 64, "dt": 2e-3}})
    out = tmp_path / "out"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "validate.json").read_text())
    assert 12.0 <= rep["refinement"]["ratio"] <= 20.0
