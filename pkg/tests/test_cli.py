import csv
import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from radial_born.cli import main
from radial_born.errors import AccuracyWarning


def write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def files(tmp_path):
    return {
        "const": write(tmp_path / "const1.json",
                       {"d": 3, "family": {"name": "piecewise", "breaks": [0, 1], "coeffs": [[1.0]]}}),
        "ex313": write(tmp_path / "ex313.json", {"d": 3, "family": {"name": "example", "mu": 1, "nu": 3}}),
        "ex310": write(tmp_path / "ex310.json", {"d": 3, "family": {"name": "example", "mu": 1, "nu": 0}}),
        "bump": write(tmp_path / "bump.json",
                      {"d": 3, "family": {"name": "piecewise", "breaks": [0, 0.5, 1],
                                          "coeffs": [[1.5, 0, -4, 0, 8], [1]]}}),
        "tmp": tmp_path,
    }


# forward ------------------------------------------------------------------------


def test_forward_constant(files, capsys):
    assert main(["forward", "--spec", files["const"], "--kmax", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,lambda,err_estimate,route"
    lam = [float(line.split(",")[1]) for line in lines[1:]]
    assert np.allclose(lam, range(6), atol=1e-12)


def test_forward_both_routes_with_manifest(files):
    out = files["tmp"] / "sp.csv"
    assert main(["forward", "--spec", files["ex313"], "--kmax", "20", "--route", "both",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert {r["route"] for r in rows} == {"conductivity-ode", "schrodinger-halfline"}
    man = json.loads((files["tmp"] / "sp.csv.manifest.json").read_text())
    assert man["command"] == "forward"
    with open(files["ex313"], "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    assert man["inputs"][files["ex313"]] == digest
    assert man["output"][str(out)] == hashlib.sha256(out.read_bytes()).hexdigest()
    assert man["results"]["max_route_difference"] < 1e-7
    for key in ("version", "seed", "tolerances", "wall_clock_seconds", "numba", "arguments"):
        assert key in man


def test_outputs_are_deterministic(files):
    a, b = files["tmp"] / "a.csv", files["tmp"] / "b.csv"
    for out in (a, b):
        assert main(["forward", "--spec", files["ex313"], "--kmax", "30", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


# born, singularities, invert -----------------------------------------------------


def test_born_pipeline(files):
    sp, born = files["tmp"] / "sp.csv", files["tmp"] / "born.csv"
    assert main(["forward", "--spec", files["ex313"], "--kmax", "200", "--out", str(sp)]) == 0
    assert main(["born", "--spectrum", str(sp), "--out", str(born)]) == 0
    rows = read_csv(born)
    assert list(rows[0]) == ["r", "gammaB", "vB", "confidence"]
    r = np.array([float(x["r"]) for x in rows])
    g = np.array([float(x["gammaB"]) for x in rows])
    exact = 1 + (8 / 10.5) * (r**6 - 1)  # 1 + C (r^6 - 1), C = (9 - 1) / (3 * 3.5)
    sel = r >= 0.05
    assert np.max(np.abs(g[sel] / exact[sel] - 1)) < 1e-3
    fit = files["tmp"] / "fit.json"
    assert main(["invert", "--born", str(born), "--fix", "nu=3", "--out", str(fit)]) == 0
    doc = json.loads(fit.read_text())
    assert doc["params"]["mu"] == pytest.approx(1.0, abs=1e-3)
    assert doc["spec"]["family"]["name"] == "example"


def test_born_needs_dimension(files):
    sp = write(files["tmp"] / "bare.csv", "k,lambda\n0,0\n1,1\n2,2\n3,3\n")
    assert main(["born", "--spectrum", sp]) == 4
    with pytest.warns(AccuracyWarning):
        assert main(["born", "--spectrum", sp, "--d", "3", "--out", str(files["tmp"] / "b.csv")]) == 0


def test_born_rejects_gaps(files):
    sp = write(files["tmp"] / "gap.csv", "k,lambda\n0,0\n1,1\n3,3\n")
    assert main(["born", "--spectrum", sp, "--d", "3"]) == 4


def test_singularities_report(files):
    out = files["tmp"] / "sing.json"
    assert main(["singularities", "--spec", files["ex310"], "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["zero_resonance"] is True
    assert doc["c0"] == pytest.approx(4.0, rel=0.02)


def test_born_with_pinned_singular_part(files):
    sp, born = files["tmp"] / "sp.csv", files["tmp"] / "born.csv"
    assert main(["forward", "--spec", files["ex310"], "--kmax", "200", "--out", str(sp)]) == 0
    assert main(["born", "--spectrum", str(sp), "--spec", files["ex310"], "--out", str(born)]) == 0
    man = json.loads((files["tmp"] / "born.csv.manifest.json").read_text())
    assert man["results"]["singular"]["c0"] == pytest.approx(4.0, rel=0.02)


# stability and locality -----------------------------------------------------------


def test_stability_table(files):
    sweep = write(files["tmp"] / "sweep.json",
                  {"perturbation": {"name": "piecewise", "breaks": [0, 1], "coeffs": [[1, 0, -2, 0, 1]]},
                   "eps": [1e-3, 1e-2, 1e-1], "k_max": 60})
    out = files["tmp"] / "table.csv"
    assert main(["stability", "--base", files["const"], "--sweep", sweep, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["eps", "born_norm", "cond_norm", "used"] and len(rows) == 3
    man = json.loads((files["tmp"] / "table.csv.manifest.json").read_text())
    assert man["results"]["spearman"] == pytest.approx(1.0)


def test_stability_schema_error(files):
    sweep = write(files["tmp"] / "sweep.json", {"perturbation": {"name": "piecewise"}, "eps": [0.1]})
    assert main(["stability", "--base", files["const"], "--sweep", sweep]) == 4
    sweep = write(files["tmp"] / "sweep2.json", {"eps": "x"})
    assert main(["stability", "--base", files["const"], "--sweep", sweep]) == 4


def test_locality_report(files):
    out = files["tmp"] / "loc.json"
    assert main(["locality", "--spec1", files["const"], "--spec2", files["bump"], "--s", "0.5",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True and doc["born_local"] is True
    assert doc["rate"] == pytest.approx(np.log(0.5), rel=0.05)


# examples -------------------------------------------------------------------------


def test_examples_log_profile(files):
    out = files["tmp"] / "ex.csv"
    assert main(["examples", "--d", "3", "--mu", "1", "--nu", "0", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["r", "gamma", "gammaB"]
    r = np.array([float(x["r"]) for x in rows])
    gb = np.array([float(x["gammaB"]) for x in rows])
    assert r[0] > 0 and r[-1] == 1.0
    assert np.allclose(gb, 1 - 4 * np.log(r), rtol=1e-13)


def test_examples_regular_profile(files, capsys):
    assert main(["examples", "--d", "2", "--mu", "3", "--nu", "1", "--n", "4"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [float(x["r"]) for x in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert float(rows[-1]["gamma"]) == pytest.approx(1.0)


# errors ---------------------------------------------------------------------------


def test_malformed_json_is_schema_error(files, capsys):
    bad = write(files["tmp"] / "bad.json", '{"d": 3,\n "family": {"name": "example", "mu": 1\n')
    assert main(["forward", "--spec", bad]) == 4
    assert "line" in capsys.readouterr().err


def test_schema_error_names_the_field(files, capsys):
    bad = write(files["tmp"] / "bad2.json", {"d": 3, "family": {"name": "example", "mu": -1, "nu": 0}})
    assert main(["forward", "--spec", bad]) == 4
    assert "mu" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(files):
    assert main(["forward", "--spec", files["const"], "--bogus"]) == 2
    assert main(["nonsense"]) == 2


def test_missing_file_is_usage_error(files):
    assert main(["forward", "--spec", str(files["tmp"] / "nope.json")]) == 2


def test_numeric_failure_exit_code():
    assert main(["examples", "--d", "2", "--mu", "1", "--nu", "0"]) == 3


def test_threads_flag(files):
    assert main(["--threads", "1", "forward", "--spec", files["const"], "--kmax", "3"]) == 0


# selftest ------------------------------------------------------------------------


def test_selftest_subset(files, capsys):
    out = files["tmp"] / "self.json"
    assert main(["selftest", "--only", "6,10", "--out", str(out)]) == 0
    table = capsys.readouterr().out
    assert "PASS" in table and "FAIL" not in table
    doc = json.loads(out.read_text())
    assert [d["number"] for d in doc] == [6, 10] and all(d["passed"] for d in doc)


def test_selftest_unknown_criterion():
    assert main(["selftest", "--only", "99"]) == 2


def test_module_entry_point(files):
    env = dict(os.environ, RADIAL_BORN_NUMBA="0")
    proc = subprocess.run([sys.executable, "-m", "radial_born", "forward", "--spec", files["const"],
                           "--kmax", "2"], capture_output=True, text=True, env=env, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "k,lambda,err_estimate,route"
