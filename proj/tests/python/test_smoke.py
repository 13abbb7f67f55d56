import json
import math
import os
import subprocess

import pytest

import apdet

CLI = os.environ.get("APDET_CLI")
CONFIGS = os.environ.get("APDET_CONFIGS", os.path.join(os.path.dirname(__file__), "..", "..", "configs"))


def test_module_basics():
    assert apdet.version()
    assert "mathieu" in apdet.experiment_kinds()
    golden = (math.sqrt(5) - 1) / 2
    assert apdet.cf_denominators(golden, 6) == [1, 2, 3, 5, 8, 13]


def test_szego_constants():
    coeffs = {-1: 1.0, 0: -5.0, 1: 1.0}
    r1 = -(5 + math.sqrt(21)) / 2
    r2 = -(5 - math.sqrt(21)) / 2
    assert abs(apdet.log_det_G(coeffs) - r1) < 1e-10
    assert apdet.winding_number({1: 1.0}) == 1
    assert abs(apdet.szego_ratio(coeffs, 40) - (-5 - r2) / (r1 - r2)) < 1e-9
    with pytest.raises(apdet.Error):
        apdet.log_det_G({1: 1.0})


def test_run_reports_findings():
    with open(os.path.join(CONFIGS, "mathieu_bad_lambda.json")) as f:
        bad = apdet.run("mathieu", f.read())
    assert bad["status"] == 1
    assert any(sev == "error" for sev, _ in bad["findings"])

    with open(os.path.join(CONFIGS, "szego_block_diag.json")) as f:
        res = apdet.run("szego-block", f.read())
    assert res["status"] == 0
    assert res["rows"]


@pytest.mark.skipif(not CLI, reason="CLI path not provided")
def test_cli_exit_codes(tmp_path):
    ok = subprocess.run([CLI, "trace", "--config", os.path.join(CONFIGS, "trace_golden.json"),
                         "--out", str(tmp_path / "t.csv")], capture_output=True)
    assert ok.returncode == 0
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("#")
    bad = subprocess.run([CLI, "mathieu", "--config", os.path.join(CONFIGS, "mathieu_bad_lambda.json")],
                         capture_output=True)
    assert bad.returncode == 1
    cfg = tmp_path / "neg.json"
    cfg.write_text(json.dumps({"b": 1.0, "xi": "golden", "lambda": 5.0, "tol": -1}))
    assert subprocess.run([CLI, "mathieu", "--config", str(cfg)], capture_output=True).returncode == 1
