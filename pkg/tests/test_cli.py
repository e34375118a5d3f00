import hashlib
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from maxconf.cli import EXIT_DOMAIN, EXIT_INVALID, EXIT_IO, EXIT_OK, main

DATA = Path(__file__).resolve().parents[1] / "data"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_design_qutrit(tmp_path):
    code, out, _ = run("design", "--input", str(DATA / "qutrit_example.json"), "--output-dir", str(tmp_path))
    assert code == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["mc"]["confidence_per_outcome"] == [0.75] * 4
    assert report["mc"]["inconclusive_probability"] == 0.4
    assert report["validation"]["mc"]["ok"] and report["validation"]["me"]["ok"]
    assert {p.name for p in tmp_path.iterdir()} == {"mc_povm.json", "me_povm.json", "report.json", "manifest.json"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for name, digest in manifest["outputs"].items():
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == digest
    assert manifest["command"] == "design" and manifest["version"]
    assert manifest["tolerances"]["eps_group"] == 1e-9


def test_design_uniform():
    code, out, _ = run("design", "--input", str(DATA / "uniform_qutrit.json"))
    assert code == EXIT_OK
    assert "MC = ME, no inconclusive element" in json.loads(out)["mc"]["notes"]


def test_malformed_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    code, _, err = run("design", "--input", str(bad))
    assert code == EXIT_IO and "not valid JSON" in err
    code, _, err = run("design", "--input", str(tmp_path / "missing.json"))
    assert code == EXIT_IO


def test_invalid_set(tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"N": 4, "coefficients": [0.5, 0.5]}))
    code, _, err = run("design", "--input", str(f))
    assert code == EXIT_DOMAIN and "normalized" in err


def test_plan_d7():
    code, out, _ = run("plan", "--input", str(DATA / "d7_pattern.json"))
    assert code == EXIT_OK
    rows = [line.split() for line in out.splitlines() if line.strip()[:1].isdigit()]
    assert [r[1] for r in rows] == ["7", "5", "3"]
    assert "UniformCoefficients" in out and "P_correct = 0.705" in out


def test_simulate_reproducible(tmp_path):
    args = ["simulate", "--input", str(DATA / "qutrit_example.json"), "--seed", "42", "--trials", "100000"]
    a = run(*args, "--output-dir", str(tmp_path / "a"))
    b = run(*args, "--output-dir", str(tmp_path / "b"))
    assert a[0] == b[0] == EXIT_OK and a[1] == b[1]
    for name in ("simulation.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    doc = json.loads(a[1])
    assert doc["consistency"]["passed"] and doc["summary"]["seed"] == 42


def test_simulate_requires_seed():
    with pytest.raises(SystemExit) as info:
        run("simulate", "--input", str(DATA / "qutrit_example.json"), "--trials", "10")
    assert info.value.code == 2


def test_sweep(tmp_path):
    code, out, _ = run("sweep", "--grid", "0:1:21", "--output-dir", str(tmp_path))
    assert code == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["skipped_points"] + len(lines) - 1 == 21 * 21
    header = lines[0].split(",")
    i_me, i_smc = header.index("p_correct_me"), header.index("p_correct_smc")
    assert min(float(r.split(",")[i_me]) - float(r.split(",")[i_smc]) for r in lines[1:]) >= -1e-10
    code, out, _ = run("sweep", "--grid", "0.5:0.6:2", "--format", "json")
    assert code == EXIT_OK and len(json.loads(out)["rows"]) == 4


def test_sweep_bad_grid():
    assert run("sweep", "--grid", "0:1")[0] == EXIT_IO


def test_compile_optics_and_validate(tmp_path):
    code, out, _ = run("compile-optics", "--input", str(DATA / "qutrit_example.json"), "--output-dir", str(tmp_path))
    assert code == EXIT_OK
    header, first = out.splitlines()[:2]
    row = dict(zip(header.split(","), first.split(",")))
    assert float(row["stage1:0"]) == 0.45 and float(row["?"]) == 0.2
    code, out, _ = run("validate", "--input", str(tmp_path / "circuit.json"))
    assert code == EXIT_OK and json.loads(out)["kind"] == "circuit"


def test_compile_optics_unsupported():
    assert run("compile-optics", "--input", str(DATA / "d7_pattern.json"))[0] == EXIT_DOMAIN


def test_validate_povm(tmp_path):
    run("design", "--input", str(DATA / "qutrit_example.json"), "--output-dir", str(tmp_path))
    assert run("validate", "--input", str(tmp_path / "mc_povm.json"))[0] == EXIT_OK
    doc = json.loads((tmp_path / "mc_povm.json").read_text())
    doc["elements"] = [[[[1.01 * re, 1.01 * im] for re, im in row] for row in e] for e in doc["elements"]]
    (tmp_path / "scaled.json").write_text(json.dumps(doc))
    code, out, _ = run("validate", "--input", str(tmp_path / "scaled.json"))
    assert code == EXIT_INVALID and "completeness" in out


def test_tolerance_override(tmp_path):
    code, _, _ = run(
        "plan", "--input", str(DATA / "qutrit_example.json"), "--tolerance", "eps_psd=1e-9", "--output-dir", str(tmp_path)
    )
    assert code == EXIT_OK
    assert json.loads((tmp_path / "manifest.json").read_text())["tolerances"]["eps_psd"] == 1e-9
    assert run("plan", "--input", str(DATA / "qutrit_example.json"), "--tolerance", "eps_x=1")[0] == EXIT_IO


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "maxconf", "plan", "--input", str(DATA / "qubit_set.json")],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0 and "OneDimensionalFailure" in r.stdout
