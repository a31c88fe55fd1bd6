import json
import subprocess
import sys

import pytest

from phvfe.catalog import builtin_config
from phvfe.cli import (
    EXIT_CAP,
    EXIT_FAIL,
    EXIT_INVALID,
    EXIT_PASS,
    EXIT_UNKNOWN,
    EXIT_USAGE,
    EXIT_VERIFY,
    build_parser,
    run_cli,
)


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = run_cli([*argv, "--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def test_verify_gl1_line(tmp_path):
    table = tmp_path / "t.csv"
    code, rep = run(tmp_path, "verify", "--instance", "gl1_line", "--q", "5", "--table", str(table))
    assert code == EXIT_PASS
    assert rep["schema"] == 1 and rep["verdict"] == "pass"
    assert rep["table"]["rows"] == 4 and rep["table"]["dual_twist"] == "trivial"
    lines = table.read_text().splitlines()
    assert lines[0] == "chi_exponent,C_re,C_im,abs_C,ratio_residual,support_residual"
    assert len(lines) == 5


def test_fit_matrix_det_2(tmp_path):
    code, rep = run(tmp_path, "fit", "--instance", "matrix_det_2", "--q", "5", "--m-max", "2")
    assert code == EXIT_PASS
    fit = rep["fit"]
    assert fit["m"] == 0 and len(fit["lambdas"]) == 2 and fit["mus"] == []
    assert all(set(c) == {"q", "k"} for c in fit["lambdas"])
    assert float(fit["zeta"]["abs"]) == pytest.approx(1.0)


def test_identities(tmp_path):
    code, rep = run(tmp_path, "identities", "--q", "7")
    assert code == EXIT_PASS
    assert set(rep["verdicts"]) >= {"gauss_trivial", "gauss_modulus", "gauss_reflection", "eqsim",
                                   "orthogonality"}


def test_identities_extension_includes_lifting(tmp_path):
    code, rep = run(tmp_path, "identities", "--p", "3", "--e", "2")
    assert code == EXIT_PASS and rep["verdicts"]["hasse_davenport"]


def test_scan_and_cross(tmp_path):
    code, rep = run(tmp_path, "scan", "--instance", "sym_det_2", "--q", "7")
    assert code == EXIT_PASS and rep["scan"]["ok"]
    code, rep = run(tmp_path, "cross", "--instance", "gl1_square", "--rho", "sign", "--q", "5",
                    "--q2", "25")
    assert code == EXIT_PASS and rep["cross"]["degree"] == 2


def test_validate_and_catalog(tmp_path, capsys):
    code, rep = run(tmp_path, "validate", "--instance", "sym_det_2", "--q", "5")
    assert code == EXIT_PASS and rep["validation"]["ok"]
    code, rep = run(tmp_path, "catalog")
    assert code == EXIT_PASS
    assert {r["name"] for r in rep["catalog"]} >= {"gl1_line", "sym_det_2"}
    assert "gl1_square" in capsys.readouterr().out


def test_config_file(tmp_path):
    cfg = tmp_path / "cat.cfg"
    cfg.write_text(builtin_config("gl1_square").text.replace("gl1_square", "mine"))
    code, rep = run(tmp_path, "verify", "--config", str(cfg), "--q", "7", "--rho", "sign")
    assert code == EXIT_PASS and rep["instance"] == "mine"


def test_config_file_rejected_with_witness(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(builtin_config("quadratic_2").text.replace("fdual_scale: solve\n", ""))
    code, _ = run(tmp_path, "verify", "--config", str(cfg), "--q", "7")
    assert code == EXIT_INVALID
    assert "gradient_duality failed at [" in capsys.readouterr().err


@pytest.mark.parametrize("argv,code", [
    (["verify", "--instance", "nope", "--q", "5"], EXIT_UNKNOWN),
    (["verify", "--instance", "gl1_line", "--q", "5", "--rho", "sign"], EXIT_UNKNOWN),
    (["verify", "--instance", "quadratic_2", "--q", "2"], EXIT_INVALID),
    (["verify", "--instance", "sym_det_3", "--q", "31"], EXIT_CAP),
    (["verify", "--instance", "gl1_line", "--q", "6"], EXIT_USAGE),
    (["verify", "--instance", "gl1_line"], EXIT_USAGE),
    (["frobnicate"], EXIT_USAGE),
    (["cross", "--instance", "gl1_line", "--q", "5", "--q2", "7"], EXIT_USAGE),
])
def test_exit_codes(argv, code):
    assert run_cli(argv) == code


def test_verification_failure_exit(tmp_path):
    cfg = tmp_path / "twist.cfg"
    text = builtin_config("gl1_square").text.replace("dual.sign: chi2(x1)", "dual.sign: 1")
    cfg.write_text(text.replace("eps.sign: chi2(x1)\n", ""))
    # the wrong dual trace still passes instance validation but breaks proportionality
    assert run_cli(["verify", "--config", str(cfg), "--q", "7", "--rho", "sign"]) == EXIT_VERIFY


def test_impossible_tolerance_exit():
    assert run_cli(["verify", "--instance", "gl1_line", "--q", "5", "--tol", "1e-30"]) == EXIT_VERIFY


def test_failed_verdict_exit(tmp_path):
    # two identical twist candidates: both verify, so the uniqueness verdict fails
    cfg = tmp_path / "dup.cfg"
    cfg.write_text(builtin_config("gl1_line").text + "eps.trivial: 1\neps.copy: 1\n")
    code, rep = run(tmp_path, "verify", "--config", str(cfg), "--q", "5")
    assert code == EXIT_FAIL
    assert rep["verdicts"] == {"ratio_residual": True, "unique_dual_twist": False}
    assert rep["verdict"] == "fail"


def test_help_documents_exit_codes():
    text = build_parser().format_help()
    for n in range(7):
        assert f"  {n}  " in text


def test_reports_are_byte_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    ta, tb = tmp_path / "a.csv", tmp_path / "b.csv"
    for out, tab in ((a, ta), (b, tb)):
        assert run_cli(["scan", "--instance", "quadratic_2", "--q", "7", "--seed", "3",
                        "--out", str(out), "--table", str(tab)]) == EXIT_PASS
    assert a.read_bytes() == b.read_bytes()
    assert ta.read_bytes() == tb.read_bytes()


def test_threads_and_naive_agree(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli(["verify", "--instance", "matrix_det_2", "--q", "3", "--table", str(a)])
    run_cli(["verify", "--instance", "matrix_det_2", "--q", "3", "--threads", "2", "--naive-dft",
             "--table", str(b)])
    rows_a = [r.split(",")[:4] for r in a.read_text().splitlines()[1:]]
    rows_b = [r.split(",")[:4] for r in b.read_text().splitlines()[1:]]
    for ra, rb in zip(rows_a, rows_b):
        assert [round(float(x), 9) for x in ra] == [round(float(x), 9) for x in rb]


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "phvfe.cli", "verify", "--instance", "gl1_line",
                          "--q", "7"], capture_output=True, text=True)
    assert res.returncode == 0 and "verdict: pass" in res.stdout
