import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from monosplit import DivergenceError, EstimationError, NumericalFailure
from monosplit.harness import cli
from monosplit.harness.cli import main
from monosplit.harness.io import read_trace


@pytest.fixture
def mono(tmp_path):
    path = tmp_path / "mono.json"
    path.write_text(json.dumps({"kind": "quadratic_plus_skew", "dim": 20, "kappa_F": 10.0,
                                "kappa_Bsym": 2.0, "seed": 1}))
    return str(path)


@pytest.fixture
def qp(tmp_path):
    path = tmp_path / "qp.json"
    path.write_text(json.dumps({"kind": "constrained_qp", "m": 12, "n": 5, "seed": 2}))
    return str(path)


@pytest.fixture
def saddle(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "bilinear_saddle", "m": 12, "n": 5, "seed": 2}))
    return str(path)


def test_solve_writes_trace(mono, tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["solve", "--problem", mono, "--method", "gss", "--alpha", "auto",
                 "--trace", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["converged"] and summary["ratio_violations"] == 0
    assert read_trace(out)["residual"][-1] <= 1e-10


@pytest.mark.parametrize("method", ["aor", "hss", "agss_imex", "agss_inexact", "agss_explicit",
                                    "explicit_euler", "implicit_euler"])
def test_solve_monotone_methods(mono, method, capsys):
    code = main(["solve", "--problem", mono, "--method", method, "--max-iter", "100000"])
    if method == "aor":
        assert code == 2  # aor needs the shifted skew kind
    else:
        assert code == 0 and json.loads(capsys.readouterr().out)["converged"]


def test_solve_saddle(qp, capsys):
    assert main(["solve", "--problem", qp, "--method", "atpd", "--max-iter", "100000"]) == 0


def test_max_iter_too_small_is_assertion_failure(mono, capsys):
    assert main(["solve", "--problem", mono, "--method", "gss", "--max-iter", "3"]) == 1


def test_usage_errors(mono, qp, tmp_path, capsys):
    assert main(["solve", "--problem", mono, "--method", "atpd"]) == 2
    assert main(["solve", "--problem", qp, "--method", "gss"]) == 2
    assert main(["solve", "--problem", qp, "--method", "prox"]) == 2
    assert main(["solve", "--problem", str(tmp_path / "missing.json"), "--method", "gss"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "quadratic_plus_skew"}')
    assert main(["solve", "--problem", str(bad), "--method", "gss"]) == 2
    for argv in (["solve", "--problem", mono, "--method", "gss", "--alpha", "-1"],
                 ["bench", "--suite", "nope"], [], ["sweep", "--kind", "constrained_qp",
                                                    "--kappa-list", "0.5", "--method", "atpd",
                                                    "--out", "x"]):
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == 2


def test_unguaranteed_alpha_is_usage_error(mono, capsys):
    assert main(["solve", "--problem", mono, "--method", "explicit_euler", "--alpha", "10"]) == 2
    assert "guaranteed range" in capsys.readouterr().err


@pytest.mark.parametrize("exc, code", [(DivergenceError("blew up"), 1),
                                       (NumericalFailure("nan"), 3),
                                       (EstimationError("few"), 3)])
def test_error_exit_codes(mono, monkeypatch, exc, code, capsys):
    def boom(*a, **k):
        raise exc
    monkeypatch.setattr(cli, "run_method", boom)
    assert main(["solve", "--problem", mono, "--method", "gss"]) == code


def test_compare(saddle, capsys):
    assert main(["compare", "--problem", saddle, "--methods", "agss,imex,prox,tpd,atpd",
                 "--max-iter", "100000"]) == 0
    out = capsys.readouterr().out
    assert all(m in out for m in ("agss", "imex", "prox", "tpd", "atpd"))
    assert main(["compare", "--problem", saddle, "--methods", ","]) == 2


def test_bench(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["bench", "--suite", "hss", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["pass"] and doc["assertions"]


def test_sweep(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MONOSPLIT_THREADS", "2")
    out = tmp_path / "s.csv"
    assert main(["sweep", "--kind", "quadratic_plus_skew", "--kappa-list", "10,100,1000",
                 "--method", "imex", "--dim", "10", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [float(r["kappa"]) for r in rows] == [10.0, 100.0, 1000.0]
    assert "slope" in capsys.readouterr().out
    assert main(["sweep", "--kind", "constrained_qp", "--kappa-list", "10",
                 "--method", "gss", "--out", str(out)]) == 2


def test_module_entry_point(mono):
    res = subprocess.run([sys.executable, "-m", "monosplit", "solve", "--problem", mono,
                          "--method", "gss"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["converged"]
