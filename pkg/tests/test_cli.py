import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import beampencil.cli as cli
from beampencil.cli import main
from beampencil.verify import TheoremEntry, TheoremReport

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_inertia_buckling(capsys):
    code, out, _ = run(["inertia", CONFIGS / "buckling.json", "--lambda", "50"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["ind"] == 1 and doc["near_singular"] is False


def test_missing_config(capsys):
    code, _, err = run(["spectrum", "missing.json"], capsys)
    assert code == 1 and "missing.json" in err


def test_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"p": {"table": [[0, 1], [0.5, -0.1], [1, 1]]}}')
    code, _, err = run(["spectrum", bad], capsys)
    assert code == 1 and "p not uniformly positive at x=0.5" in err


@pytest.mark.parametrize("argv", [
    ["frobnicate", "x.json"],
    ["inertia", "configs/buckling.json"],
    ["inertia", "configs/buckling.json", "--lambda", "abc"],
    ["verify", "configs/buckling.json", "--bogus"],
    [],
])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_spectrum_output(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, stdout, _ = run(["spectrum", CONFIGS / "c_minus500.json", "--out", out], capsys)
    assert code == 0 and stdout == ""
    doc = json.loads(out.read_text())
    assert len(doc["negatives"]) == 7 and doc["converged_count"]["negative"] == 6
    assert doc["negative_converged"][:6] == [True] * 6


def test_admissible(capsys):
    code, out, _ = run(["admissible", CONFIGS / "buckling.json"], capsys)
    assert code == 0 and json.loads(out)["sup_lambda"] == pytest.approx(np.pi**2, rel=1e-6)


def test_transform(capsys):
    code, out, _ = run(["transform", CONFIGS / "buckling.json", "--lambda", "-1", "--stride", "400"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert set(doc) >= {"lambda", "omega", "t", "p_hat", "r_hat"}
    assert len(doc["t"]) == len(doc["p_hat"]) == len(doc["r_hat"]) == 81
    code, _, err = run(["transform", CONFIGS / "buckling.json", "--lambda", "20"], capsys)
    assert code == 1 and "admissible" in err


def test_oscillation(capsys):
    code, out, _ = run(["oscillation", CONFIGS / "c_minus500.json", "--index", "-3"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["count"] == 2 and doc["all_simple"]
    code, _, err = run(["oscillation", CONFIGS / "c_minus500.json", "--index", "-7"], capsys)
    assert code == 1 and "not converged" in err
    code, _, _ = run(["oscillation", CONFIGS / "c_minus500.json", "--index", "0"], capsys)
    assert code == 1


def test_verify_all_pass(capsys):
    code, out, _ = run(["verify", CONFIGS / "c_minus500.json"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert all(t["status"] in ("pass", "info") for t in doc["theorems"])


def test_verify_pair_and_eigenfunctions(tmp_path, capsys):
    code, out, _ = run(["verify", CONFIGS / "c_plus5_mass_end.json", "--pair",
                        "--emit-eigenfunctions", tmp_path / "ef"], capsys)
    assert code == 0
    names = {t["name"] for t in json.loads(out)["theorems"]}
    assert "interlacing" in names and "clamped_clamped:admissibility" in names
    files = sorted(p.name for p in (tmp_path / "ef").iterdir())
    assert "clamped_mass_end_p1.csv" in files
    data = np.loadtxt(tmp_path / "ef" / "clamped_mass_end_p1.csv", delimiter=",", skiprows=1)
    assert data.shape == (2001, 4)
    assert (tmp_path / "ef" / "clamped_mass_end_p1.csv").read_text().startswith("x,y,dy,ddy\n")


def test_verify_exit_2_on_failure(monkeypatch, capsys):
    monkeypatch.setattr(cli, "run_verification",
                        lambda *a, **k: TheoremReport({}, [TheoremEntry("x", "fail")], {}))
    code, out, _ = run(["verify", CONFIGS / "buckling.json"], capsys)
    assert code == 2 and json.loads(out)["theorems"][0]["status"] == "fail"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "beampencil", "inertia", str(CONFIGS / "buckling.json"),
                          "--lambda", "0"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["ind"] == 0
