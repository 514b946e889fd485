import json
import math
import subprocess
import sys

import pytest

from conclab.cli import run

CUBE2 = {"cube": 2}
X0X1 = {"walsh": [{"subset": [0, 1], "coef": 1.0}]}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    return write


def io_args(files, space, function):
    return ["--space", files("space.json", space), "--function", files("f.json", function)]


def test_certify_pass_csv(files):
    code, text = run(["certify", "cor_bernoulli", "--csv", *io_args(files, CUBE2, X0X1)])
    assert code == 0
    row = text.split(",")
    assert row[0] == "cor_bernoulli" and row[5] == "pass"
    c = float(row[1])
    assert c == pytest.approx(1 / 7, rel=1e-15)
    assert float(row[3]) == pytest.approx(math.exp(c), rel=1e-14)
    assert float(row[6]) == pytest.approx(float(row[2]) - float(row[3]), rel=1e-12)


def test_certify_json_fields(files):
    code, text = run(["certify", "thm_zentral", *io_args(files, CUBE2, X0X1)])
    out = json.loads(text)
    assert code == 0 and out["verdict"] == "pass" and out["theorem_id"] == "thm_zentral"
    assert all(out["hypothesis_ok"].values())
    # exact E exp(c|x0 x1|) = e^c
    assert out["measured"] == pytest.approx(math.exp(out["bound_constant"]), rel=1e-14)


def test_fail_exit_code(files):
    space = {"factors": [{"atoms": [1, -1], "probs": [0.7, 0.3]}]}
    code, text = run(["mlsi", "--sigma2", "1", "--csv", *io_args(files, space, {"table": [0.0, 0.3]})])
    assert code == 1 and text.split(",")[5] == "fail"
    code, _ = run(["mlsi", "--sigma2", "2", *io_args(files, space, {"table": [0.0, 0.3]})])
    assert code == 0


def test_not_applicable_exit_code(files):
    # |𝔡f| is not constant here, so a large multiple breaks the normalization
    f = {"walsh": [{"subset": [0, 1], "coef": 3.0}, {"subset": [1, 2], "coef": 3.0}]}
    code, text = run(["certify", "thm_zentral", *io_args(files, {"cube": 3}, f)])
    assert code == 2 and json.loads(text)["verdict"] == "not_applicable"
    code, text = run(["certify", "thm_zentral", "--rescale", *io_args(files, {"cube": 3}, f)])
    assert code == 0


def test_malformed_json_reports_position(files, capsys):
    code, text = run(["decompose", "--space", files("s.json", '{"cube": 2,\n  oops}'), "--function", files("f.json", X0X1)])
    assert code == 3 and text == ""
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


@pytest.mark.parametrize(
    "extra",
    [
        ["certify", "thm_zentral", "--method", "mc", "--samples", "10"],
        ["certify", "thm_zentral", "--seed", "-1"],
        ["certify", "no_such_theorem"],
        ["diffops", "--op", "D"],
        ["diffops", "--op", "D", "--i", "5"],
        ["diffops", "--op", "d_ij", "--i", "0", "--j", "0"],
        ["spectrum", "--tol", "0"],
    ],
)
def test_input_errors(files, extra):
    code, text = run([*extra, *io_args(files, CUBE2, X0X1)])
    assert code == 3 and text == ""


def test_bad_space_and_function(files):
    assert run(["decompose", *io_args(files, {"cube": 0}, X0X1)])[0] == 3
    assert run(["decompose", *io_args(files, CUBE2, {"table": [1, 2, 3]})])[0] == 3
    bad = {"factors": [{"atoms": [0, 1], "probs": [0.5, 0.6]}]}
    assert run(["decompose", *io_args(files, bad, {"table": [1, 2]})])[0] == 3
    assert run(["bogus"])[0] == 3


def test_threads_variable(files, monkeypatch):
    args = ["certify", "thm_zentral", *io_args(files, CUBE2, X0X1)]
    base = run(args)
    for value in ("1", "8"):
        monkeypatch.setenv("CONC_LAB_THREADS", value)
        assert run(args) == base
    for value in ("0", "-2", "many"):
        monkeypatch.setenv("CONC_LAB_THREADS", value)
        assert run(args)[0] == 3


def test_repeatable_monte_carlo(files):
    args = ["certify", "thm_zentral", "--method", "mc", "--samples", "5000", "--seed", "11", *io_args(files, CUBE2, X0X1)]
    a, b = run(args), run(args)
    assert a == b and a[0] == 0
    other = run(args[:7] + ["12"] + args[8:])
    assert other[1] != a[1]


def test_decompose(files):
    f = {"table": [1.0, 2.0, 3.0, 5.0]}
    code, text = run(["decompose", *io_args(files, CUBE2, f)])
    out = json.loads(text)
    terms = {tuple(t["subset"]): t for t in out["terms"]}
    assert code == 0
    # f = 11/4 + ¾x0 + 1¼x1 + ¼x0x1 on {±1}², table index 0 = (atoms[0], atoms[0])
    want = {(): 2.75, (0,): 0.75, (1,): 1.25, (0, 1): 0.25}
    for s, coef in want.items():
        assert math.sqrt(terms[s]["norm2"]) == pytest.approx(abs(coef), rel=1e-12)


def test_diffops_values(files):
    f = {"table": [1.0, 2.0, 3.0, 5.0]}
    code, text = run(["diffops", "--op", "D", "--i", "0", *io_args(files, CUBE2, f)])
    out = json.loads(text)
    assert code == 0 and out["values"] == pytest.approx([-0.5, 0.5, -1.0, 1.0])
    code, text = run(["diffops", "--op", "hess_hs2_D2", *io_args(files, CUBE2, X0X1)])
    assert code == 0 and len(json.loads(text)["values"]) == 4


def test_spectrum(files):
    f = {"walsh": [{"subset": [0, 1, 2], "coef": 1.0}, {"subset": [0], "coef": 2.0}]}
    code, text = run(["spectrum", *io_args(files, {"cube": 3}, f)])
    assert code == 0 and json.loads(text)["ok"] is True
    assert "6" in text


def test_gaussian_commands(files):
    A = files("A.json", {"dimension": 2, "data": [0.5, 0, 0, -0.5]})
    code, text = run(["gaussian", "certify", "--A", A, "--samples", "20000", "--csv"])
    assert code == 0 and text.split(",")[5] == "pass"
    assert float(text.split(",")[1]) == pytest.approx(1 / 6)
    assert run(["gaussian", "poincare", "--A", A])[0] == 0
    assert run(["gaussian", "itgrad", "--A", A, "--count", "50"])[0] == 0
    big = files("B.json", {"dimension": 2, "data": [1, 0, 0, 0]})
    assert run(["gaussian", "certify", "--A", big, "--samples", "1000"])[0] == 2
    asym = files("C.json", {"dimension": 2, "data": [0, 1, 0, 0]})
    assert run(["gaussian", "poincare", "--A", asym])[0] == 3
    ell = files("l.json", [1.0, 0.0])
    code, text = run(["gaussian", "certify", "--first-order", "--A", A, "--l", ell, "--samples", "20000"])
    assert code == 0 and json.loads(text)["theorem_id"] == "thm_kontinuierlich_1ordn"


def test_selftest():
    code, text = run(["selftest"])
    assert code == 0 and json.loads(text)["ok"] is True


def test_module_entry_point_is_byte_identical(files):
    args = [sys.executable, "-m", "conclab", "certify", "thm_einfachere", *io_args(files, {"cube": 3}, X0X1)]
    a = subprocess.run(args, capture_output=True, check=False)
    b = subprocess.run(args, capture_output=True, check=False)
    assert a.returncode == 0 and a.stdout == b.stdout and a.stdout.endswith(b"\n")
