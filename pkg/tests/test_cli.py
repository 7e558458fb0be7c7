import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from cosserat_critic.cli import EXIT_PARSE, EXIT_UNMATCHED, EXIT_VALIDATION, main, to_json


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report(tmp_path, *argv):
    out = str(tmp_path / "report.json")
    code, _, err = run(*argv, "--out", out)
    assert code == 0, err
    with open(out) as fh:
        return json.load(fh)


class TestReduce:
    def test_identity(self, tmp_path):
        rep = report(tmp_path, "reduce", "--input", write(tmp_path, "p.json", {"F": np.eye(3).tolist()}))
        assert rep["lambdas"] == [1.0, 1.0, 1.0]
        assert rep["regime"] == "mu_gt_muc"

    def test_shear(self, tmp_path):
        F = [[1, 1, 0], [0, 1, 0], [0, 0, 1]]
        rep = report(tmp_path, "reduce", "--input", write(tmp_path, "p.json", {"F": F}))
        expected = [math.sqrt(1.5 + 0.5 * math.sqrt(5)), 1.0, math.sqrt(1.5 - 0.5 * math.sqrt(5))]
        assert np.allclose(rep["lambdas"], expected, atol=1e-12)
        assert rep["product_identity_residual"] <= 1e-12

    def test_flip_notice(self, tmp_path):
        rep = report(tmp_path, "reduce", "--input", write(tmp_path, "p.json", {"F": np.eye(2).tolist(), "mu": 2, "mu_c": 3}))
        assert rep["regime"] == "mu_lt_muc"
        assert any("flip" in n or "maxima" in n for n in rep["notes"])

    def test_grioli_notice(self, tmp_path):
        rep = report(tmp_path, "reduce", "--input", write(tmp_path, "p.json", {"F": np.eye(2).tolist(), "mu": 1, "mu_c": 1}))
        assert rep["regime"] == "grioli" and "lambdas" not in rep

    def test_csv_input(self, tmp_path):
        path = write(tmp_path, "F.csv", "2,0\n0,0.5\n")
        rep = report(tmp_path, "reduce", "--input", path, "--format", "csv")
        assert rep["lambdas"] == [2.0, 0.5]


class TestErrors:
    def test_json_syntax_position(self, tmp_path):
        code, _, err = run("reduce", "--input", write(tmp_path, "p.json", '{"F": [[1, 0], [0, 1]'))
        assert code == EXIT_PARSE and "line 1" in err

    def test_csv_position(self, tmp_path):
        code, _, err = run("reduce", "--input", write(tmp_path, "F.csv", "1,0\n0,x\n"), "--format", "csv")
        assert code == EXIT_PARSE and "line 2" in err

    def test_both_f_and_lambdas(self, tmp_path):
        code, _, _ = run("reduce", "--input", write(tmp_path, "p.json", {"F": [[1, 0], [0, 1]], "lambdas": [1, 1]}))
        assert code in (EXIT_PARSE, EXIT_VALIDATION)

    def test_negative_determinant(self, tmp_path):
        code, _, err = run("reduce", "--input", write(tmp_path, "p.json", {"F": [[1, 0], [0, -1]]}))
        assert code == EXIT_VALIDATION

    def test_catalog_n4_suggests_verify(self, tmp_path):
        code, _, err = run("catalog", "--input", write(tmp_path, "p.json", {"lambdas": [4, 3, 2, 1]}))
        assert code == EXIT_VALIDATION and "verify" in err

    def test_verify_non_rotation(self, tmp_path):
        prob = write(tmp_path, "p.json", {"lambdas": [2, 1]})
        rot = write(tmp_path, "R.json", [[1, 0], [0, -1]])
        code, _, err = run("verify", "--input", prob, "--rotation", rot)
        assert code == EXIT_VALIDATION and "det" in err.lower()

    def test_missing_file(self, tmp_path):
        code, _, _ = run("reduce", "--input", str(tmp_path / "nope.json"))
        assert code == EXIT_PARSE

    def test_unmatched_exit_code(self, tmp_path):
        # an impossible match tolerance leaves every converged limit unmatched
        prob = write(tmp_path, "p.json", {"lambdas": [2, 1]})
        code, out, _ = run("solve", "--input", prob, "--starts", "3", "--tol-match", "1e-300")
        assert code == EXIT_UNMATCHED and "UNMATCHED" in out


class TestCatalog:
    def test_four_two_one(self, tmp_path):
        rep = report(tmp_path, "catalog", "--input", write(tmp_path, "p.json", {"lambdas": [4, 2, 1]}))
        mins = [p for p in rep["points"] if p["global"] == "global_min"]
        assert {p["base"] for p in mins} == {"q^(7)"}
        assert all(p["reduced_energy"] == 2.0 for p in mins)
        assert rep["provenance"]["tolerances"]["grad"] == 1e-8

    def test_n2_four_entries(self, tmp_path):
        rep = report(tmp_path, "catalog", "--input", write(tmp_path, "p.json", {"lambdas": [2, 1]}))
        assert len(rep["points"]) == 4

    def test_equal_has_families(self, tmp_path):
        rep = report(tmp_path, "catalog", "--input", write(tmp_path, "p.json", {"lambdas": [1, 1, 1]}))
        fams = [p for p in rep["points"] if p.get("family")]
        assert fams and all(f["family"]["kind"] == "two_sphere" for f in fams)
        q0 = next(p for p in rep["points"] if p["base"] == "q^(0)")
        assert q0["label"] == "degenerate"

    def test_json_round_trip(self, tmp_path):
        path = write(tmp_path, "p.json", {"F": [[1.3, 0.2, 0.0], [0.1, 0.9, 0.3], [0.0, 0.2, 1.1]], "mu": 2, "mu_c": 0.5})
        out = str(tmp_path / "r.json")
        assert run("catalog", "--input", path, "--out", out)[0] == 0
        text = open(out).read()
        rep = json.loads(text)
        assert to_json(rep) + "\n" == text

    def test_floats_exact(self):
        x = 0.1 + 0.2
        assert json.loads(to_json({"x": x}))["x"] == x
        assert json.loads(to_json({"x": math.inf}))["x"] is None

    @pytest.mark.parametrize(
        "problem",
        [
            {"lambdas": [4, 2, 1]},
            {"lambdas": [2, 2, 0.5]},
            {"F": [[1, 1, 0], [0, 1, 0], [0, 0, 1]], "mu": 1.5, "mu_c": 0.5},
            {"F": [[2, 0.3], [0, 0.8]], "mu": 1, "mu_c": 3},
        ],
    )
    def test_verify_round_trip(self, tmp_path, problem):
        prob = write(tmp_path, "p.json", problem)
        cat = report(tmp_path, "catalog", "--input", prob)
        out = str(tmp_path / "v.json")
        code, _, err = run("verify", "--input", prob, "--rotation", str(tmp_path / "report.json"), "--out", out)
        assert code == 0, err
        results = json.load(open(out))["results"]
        assert len(results) == len(cat["points"])
        assert all(r["critical"] for r in results)
        # the generic SO(n) Hessian agrees with the catalog's sign classification
        labels = {p["name"]: p["raw_label"] for p in cat["points"]}
        for r in results:
            assert r["label"] == labels[r["name"]]


class TestVerify:
    def test_polar_rotation_of_random_F(self, tmp_path, rng):
        F = np.eye(4) + 0.3 * rng.standard_normal((4, 4))
        U, _, Vt = np.linalg.svd(F)
        R = U @ Vt
        if np.linalg.det(R) < 0:
            pytest.skip("reflection")
        prob = write(tmp_path, "p.json", {"F": F.tolist(), "mu": 1, "mu_c": 0.3})
        rot = write(tmp_path, "R.csv", "\n".join(",".join(repr(float(v)) for v in row) for row in R))
        rep = report(tmp_path, "verify", "--input", prob, "--rotation", rot)
        assert rep["results"][0]["critical"]

    def test_random_not_critical(self, tmp_path):
        a = 0.3
        R = [[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]]
        rep = report(tmp_path, "verify", "--input", write(tmp_path, "p.json", {"lambdas": [2, 1]}), "--rotation", write(tmp_path, "R.json", {"R": R}))
        res = rep["results"][0]
        assert not res["critical"] and res["criticality_residual"] > 0.1 and "label" not in res


class TestSolve:
    def test_all_identity(self, tmp_path):
        rep = report(tmp_path, "solve", "--input", write(tmp_path, "p.json", {"lambdas": [0.6, 0.6]}), "--starts", "30")
        assert rep["hits"] == {"R^(1)": 30} and rep["unmatched"] == []

    def test_same_seed_same_bytes(self, tmp_path):
        prob = write(tmp_path, "p.json", {"lambdas": [4, 2, 1]})
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        assert run("solve", "--input", prob, "--starts", "20", "--seed", "7", "--out", a)[0] == 0
        assert run("solve", "--input", prob, "--starts", "20", "--seed", "7", "--out", b)[0] == 0
        assert open(a, "rb").read() == open(b, "rb").read()


def test_console_entry_point(tmp_path):
    prob = write(tmp_path, "p.json", {"lambdas": [2, 1]})
    proc = subprocess.run([sys.executable, "-m", "cosserat_critic", "catalog", "--input", prob], capture_output=True, text=True)
    assert proc.returncode == 0 and "R^(3)_+" in proc.stdout


def test_signed_zero_and_integral_floats_survive():
    back = json.loads(to_json({"v": [-0.0, 2.0, 1e-300, 3]}))["v"]
    assert math.copysign(1.0, back[0]) == -1.0
    assert isinstance(back[1], float) and back[2] == 1e-300 and back[3] == 3
