import json
import subprocess
import sys

import pytest

from dyadic_zygmund.cli import main, parse_boxes, parse_exponent, format_exponent, UsageError
from dyadic_zygmund.dyadic import RootExponent


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exponent_parsing_roundtrip():
    assert parse_exponent("-3") == -3
    assert parse_exponent("sqrt(5)") == RootExponent(5, 2)
    assert parse_exponent("-root(7,3)") == RootExponent(-7, 3)
    for text in ("4", "sqrt(2)", "-sqrt(3)", "root(5,3)"):
        assert format_exponent(parse_exponent(text)) == text
    with pytest.raises(UsageError):
        parse_exponent("pi")
    assert [b.d for b in parse_boxes("1,-1; sqrt(2),0")] == [2, 2]


def test_measure_exact_and_oracle(capsys):
    code, out, _ = run(capsys, "measure", "--boxes", "1,-1;0,0", "--oracle", "inclusion-exclusion")
    data = json.loads(out)
    assert code == 0 and data["value"] == "3/2" and data["oracle_agrees"] and data["mode"] == "exact"


def test_measure_certified(capsys):
    code, out, _ = run(capsys, "measure", "--boxes", "sqrt(2),-sqrt(2)", "--oracle", "grid", "--precision", "80")
    data = json.loads(out)
    assert code == 0 and data["mode"] == "certified" and data["oracle_agrees"]
    assert float(data["error"]) < 1e-20


def test_usage_errors_exit_2(capsys):
    assert run(capsys, "measure")[0] == 2
    assert run(capsys, "measure", "--boxes", "1,2;3")[0] == 2
    assert run(capsys, "measure", "--boxes", "sqrt(2)", "--mode", "exact")[0] == 2
    assert run(capsys, "lowerbound", "--precision", "32")[0] == 2
    assert run(capsys, "lowerbound", "--cd", "x")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "oracle-check", "--max-boxes", "30")[0] == 2


def test_failing_check_exits_1(capsys):
    code, out, err = run(capsys, "suite", "--mutate-beta")
    assert code == 1 and "FAIL beta_prefix" in err
    assert json.loads(out)["passed"] is False


def test_config_file_and_flag_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep\ndim = 4\nkmin = 5\nkmax = 15\nkstep = 5\nalpha = 0,2\n")
    code, out, err = run(capsys, "lowerbound", "--config", str(conf), "--kmax", "10")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].endswith("ratio_alpha_0,ratio_alpha_2")
    assert [l.split(",")[0] for l in lines[1:]] == ["5", "10"]
    assert json.loads(err)["k_values"] == [5, 10]
    conf.write_text("colour = blue\n")
    assert run(capsys, "lowerbound", "--config", str(conf))[0] == 2


def test_small_commands(capsys):
    code, out, _ = run(capsys, "beta", "--count", "6")
    assert code == 0 and out.splitlines()[5] == "5 2 -2"
    code, out, _ = run(capsys, "coverage", "--dim", "2", "--window", "3")
    assert code == 0 and json.loads(out)["missing"] == []
    code, out, _ = run(capsys, "family", "--k", "2")
    assert out.splitlines() == ["0 0 0 0", "1 -1 0 0", "sqrt(2) -sqrt(2) 1 -1"]
    code, out, _ = run(capsys, "sparseness", "--k", "10")
    assert code == 0 and json.loads(out)["boxes"] == 34
    code, out, _ = run(capsys, "oracle-check", "--trials", "30")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "check-extension", "--trials", "5", "--window", "16")
    assert code == 0


def test_outputs_are_byte_identical(tmp_path):
    def go(tag):
        csv = tmp_path / f"{tag}.csv"
        js = tmp_path / f"{tag}.json"
        rep = tmp_path / f"{tag}-suite.json"
        base = [sys.executable, "-m", "dyadic_zygmund"]
        subprocess.run(base + ["lowerbound", "--kmin", "5", "--kmax", "20", "--kstep", "5", "--out", str(csv), "--summary", str(js)], check=True)
        subprocess.run(base + ["suite", "--seed", "3", "--out", str(rep)], check=True, capture_output=True)
        return csv.read_bytes(), js.read_bytes(), rep.read_bytes()

    assert go("a") == go("b")
