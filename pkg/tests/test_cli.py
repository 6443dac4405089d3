import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from wricci import cli
from wricci.verify import Check

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_curvature_golden(capsys):
    code, out, err = run(capsys, "curvature", "--model", "flat-product", "--dim", "2", "--slope", "1",
                         "--Neff", "-2", "--grid", "-1:1:2")
    assert code == 0 and err == ""
    assert out == (GOLDEN / "curvature_flat_product.json").read_text()


def test_curvature_m1_summary(capsys):
    code, out, _ = run(capsys, "curvature", "--model", "m1", "--K", "1", "--Neff", "-2", "--grid", "-5:5:101")
    rec = json.loads(out)
    assert code == 0
    assert set(rec) == {"meta", "inputs", "results"}
    cell = rec["results"]["cells"][0]
    assert len(cell["points"]) == 101
    assert cell["summary_min"] == pytest.approx(1.0, abs=1e-12)


def test_curvature_flat_product_default_grid(capsys):
    code, out, _ = run(capsys, "curvature", "--model", "flat-product", "--dim", "2", "--slope", "1", "--Neff", "-2")
    assert json.loads(out)["results"]["cells"][0]["summary_min"] == pytest.approx(0.0, abs=1e-14)


def test_curvature_hyperbolic_csv(capsys):
    code, out, _ = run(capsys, "curvature", "--model", "hyperbolic-example", "--Neff", "-2",
                       "--grid-2d", "-1:1:3,0.5:2:4", "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "K,N,point,ric_n_min,direction"
    assert len(lines) == 13
    for line in lines[1:]:
        assert float(line.split(",")[3]) == pytest.approx(3.0, rel=1e-12)


def test_sweep_cells_are_ordered_and_thread_independent(capsys):
    argv = ["curvature", "--model", "m1", "--K", "0.5,1,2", "--Neff", "-5,-2", "--grid", "-1:1:3"]
    _, one, _ = run(capsys, *argv, "--jobs", "1")
    _, many, _ = run(capsys, *argv, "--jobs", "4")
    assert one == many
    cells = json.loads(one)["results"]["cells"]
    assert [(c["K"], c["N"]) for c in cells] == [(0.5, -5), (0.5, -2), (1, -5), (1, -2), (2, -5), (2, -2)]


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--model", "m1", "--K", "1", "--Neff", "-2", "--L", "30",
                       "--nodes", "4001")
    cell = json.loads(out)["results"]["cells"][0]
    assert code == 0
    assert cell["lambda1"] == pytest.approx(2 / 3, abs=1e-3)
    assert cell["margin"] == pytest.approx(cell["lambda1"] - 2 / 3)
    assert cell["grid"] == {"L": 30, "nodes": 4001, "h": pytest.approx(0.015)}
    assert len(cell["eigenfunction"]["x"]) == 101


def test_spectrum_gauss_and_infinite_volume(capsys):
    _, out, _ = run(capsys, "spectrum", "--model", "gauss", "--K", "1", "--nodes", "1001")
    assert json.loads(out)["results"]["cells"][0]["lambda1"] == pytest.approx(1.0, abs=1e-3)
    code, out, _ = run(capsys, "spectrum", "--weight", "sqrt(3)*x", "--nodes", "401")
    cell = json.loads(out)["results"]["cells"][0]
    assert code == 0
    assert cell["bound"] is None
    assert any("infinite volume" in f for f in cell["flags"])


def test_spectrum_is_byte_deterministic(capsys):
    argv = ["spectrum", "--model", "m1", "--K", "1", "--Neff", "-2", "--nodes", "801"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_inf_dimension_is_serialized_as_string(capsys):
    _, out, _ = run(capsys, "bochner", "--model", "gauss", "--K", "1", "--Neff", "inf", "--u", "x^3",
                    "--grid", "-1:1:3")
    rec = json.loads(out)
    assert rec["inputs"]["Neff"] == ["inf"]
    assert rec["results"]["cells"][0]["min_gap"] >= -1e-6


def test_concentration_and_lsi(capsys):
    _, out, _ = run(capsys, "concentration", "--model", "m1", "--K", "1", "--Neff", "-2", "--r", "0,1,2")
    prof = json.loads(out)["results"]["cells"][0]["profile"]
    assert prof[0]["alpha"] == 0.5
    assert not any(p["exceeds"] for p in prof)
    _, out, _ = run(capsys, "lsi", "--model", "gauss", "--K", "1", "--Neff", "inf", "--beta-max", "2",
                    "--L", "12", "--betas", "8")
    cell = json.loads(out)["results"]["cells"][0]
    assert len(cell["sweep"]) == 8 and not cell["violated"]


def test_warped_product(capsys):
    _, out, _ = run(capsys, "warped-product", "--K", "1", "--Neff", "-2")
    cell = json.loads(out)["results"]["cells"][0]
    assert cell["sigma_threshold"] == pytest.approx(4 / 3)
    assert cell["composed_bound"] == pytest.approx(1.0)
    assert max(abs(v - 1) for v in cell["radial_ric_n"]) < 1e-12


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# m1 sweep\nmodel = m1\nK = 1\nNeff = -2\ngrid = -1:1:3\nformat = csv\n")
    _, out, _ = run(capsys, "curvature", "--config", str(cfg))
    assert out.splitlines()[1].startswith("1,-2,")
    _, out, _ = run(capsys, "curvature", "--config", str(cfg), "--K", "2")
    assert out.splitlines()[1].startswith("2,-2,")
    assert float(out.splitlines()[1].split(",")[3]) == pytest.approx(2.0)


def test_out_file(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = run(capsys, "curvature", "--model", "m1", "--K", "1", "--Neff", "-2", "--out", str(dest))
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["meta"]["command"] == "curvature"


@pytest.mark.parametrize(
    "argv, code, kind",
    [
        (["curvature"], 2, "config"),
        (["curvature", "--model", "m1", "--weight", "x", "--Neff", "-2"], 2, "config"),
        (["curvature", "--model", "nope", "--Neff", "-2"], 2, "config"),
        (["curvature", "--model", "m1", "--K", "1", "--Neff", "0.5"], 2, "config"),
        (["curvature", "--weight", "x+", "--Neff", "-2"], 2, "config"),
        (["curvature", "--model", "m1", "--K", "1", "--Neff", "-2", "--grid", "1:0:3"], 2, "config"),
        (["spectrum", "--model", "m1", "--K", "1", "--Neff", "-2", "--nodes", "100"], 2, "config"),
        (["spectrum", "--model", "hyperbolic", "--Neff", "-2"], 2, "config"),
        (["curvature", "--config", "/no/such/file"], 2, "config"),
        (["frobnicate"], 2, "config"),
        (["curvature", "--weight", "log(x)", "--Neff", "-2"], 3, "numeric"),
        (["curvature", "--metric", "x", "--Neff", "-2", "--grid", "-1:1:3"], 3, "numeric"),
    ],
)
def test_error_paths(capsys, argv, code, kind):
    got, out, err = run(capsys, *argv)
    assert got == code
    assert out == ""
    assert err.startswith(f"error[{kind}]: ")
    assert err.count("\n") == 1


def test_verify_exit_codes(capsys, monkeypatch):
    code, out, _ = run(capsys, "verify", "warped")
    assert code == 0
    assert "PASS" in out and "FAIL" not in out
    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: [Check("broken", "1", "2", "0", False)])
    code, out, _ = run(capsys, "verify", "warped")
    assert code == 1 and "FAIL" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wricci", "verify", "hyperbolic"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].split()[:5] == ["check", "expected", "got", "tolerance", "status"]
    proc = subprocess.run([sys.executable, "-m", "wricci", "spectrum"], capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stderr.startswith("error[config]:")


def test_to_json_number_format():
    text = cli.to_json({"a": 0.1, "b": [1 / 3, math.inf], "c": None, "d": True})
    assert json.loads(text) == {"a": 0.1, "b": [0.33333333333333331, "inf"], "c": None, "d": True}
    assert "0.33333333333333331" in text
