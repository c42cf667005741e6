import json

import numpy as np
import pytest
import scipy.sparse as sp

from monosplit import MalformedProblemError, solve_flow
from monosplit.core import _to_dense
from monosplit.harness import (ProblemSpec, Report, generate, load_problem, read_matrix,
                               read_trace, write_matrix, write_trace)
from monosplit.harness.io import PROBLEM_SCHEMA, TRACE_COLUMNS, dump_problem


@pytest.mark.parametrize("spec", [
    ProblemSpec("shifted_skew_linear", dim=25, kappa_Bsym=7.0, seed=1),
    ProblemSpec("quadratic_plus_skew", dim=25, kappa_F=1e3, seed=2),
    ProblemSpec("bilinear_saddle", m=20, n=9, seed=3),
    ProblemSpec("constrained_qp", m=20, n=9, seed=4),
])
def test_matrix_market_roundtrip_exact(tmp_path, spec):
    p = generate(spec)
    mats = [p.B, p.H_f] if hasattr(p, "H_f") else [p.N, p.hessian]
    for i, M in enumerate(mats):
        path = tmp_path / f"m{i}.mtx"
        write_matrix(path, M)
        back = read_matrix(path)
        assert sp.issparse(back)
        np.testing.assert_array_equal(back.toarray(), _to_dense(M))


def test_paths_replace_generated(tmp_path):
    p = generate(ProblemSpec("shifted_skew_linear", dim=6, kappa_Bsym=2.0, seed=3))
    write_matrix(tmp_path / "N.mtx", p.N)
    doc = {"kind": "shifted_skew_linear", "dim": 6, "seed": 99, "paths": {"N": "N.mtx"}}
    (tmp_path / "prob.json").write_text(json.dumps(doc))
    spec = load_problem(str(tmp_path / "prob.json"))
    assert spec.paths["N"] == str(tmp_path / "N.mtx")
    q = generate(spec)
    np.testing.assert_array_equal(_to_dense(q.N), _to_dense(p.N))


def test_load_problem_sources(tmp_path):
    spec = ProblemSpec("constrained_qp", m=6, n=3, seed=5, kappa_f=4.0)
    path = tmp_path / "p.json"
    dump_problem(spec, path)
    assert load_problem(str(path)) == spec
    assert load_problem(json.dumps(spec.to_dict())) == spec
    assert load_problem(spec.to_dict()) == spec


@pytest.mark.parametrize("doc", [
    {"dim": 3},
    {"kind": "quadratic_plus_skew"},
    {"kind": "bilinear_saddle", "m": 4},
    {"kind": "quadratic_plus_skew", "dim": 3, "extra": 1},
    {"kind": "quadratic_plus_skew", "dim": 0},
    {"kind": "quadratic_plus_skew", "dim": 3, "seed": -4},
    {"kind": "constrained_qp", "m": 4, "n": 2, "paths": {"X": "a.mtx"}},
])
def test_schema_errors(doc):
    with pytest.raises(MalformedProblemError):
        load_problem(doc)


def test_not_json():
    with pytest.raises(MalformedProblemError):
        load_problem("definitely not json {")


def test_schema_is_documented():
    assert PROBLEM_SCHEMA["description"]
    assert set(PROBLEM_SCHEMA["properties"]) >= {"kind", "dim", "m", "n", "seed", "paths"}


def test_trace_csv_roundtrip(tmp_path):
    p = generate(ProblemSpec("quadratic_plus_skew", dim=10, seed=0))
    _, tr = solve_flow(p, "gss")
    path = tmp_path / "t.csv"
    write_trace(tr, path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(TRACE_COLUMNS)
    cols = read_trace(path)
    np.testing.assert_array_equal(cols["lyapunov"], np.asarray(tr.lyapunov, dtype=float))
    np.testing.assert_array_equal(cols["k"], np.asarray(tr.k, dtype=float))
    assert np.isnan(cols["inner_iters"]).all()


def test_trace_without_solution_has_empty_errors(tmp_path):
    p = generate(ProblemSpec("quadratic_plus_skew", dim=10, seed=0))
    p.x_star = None
    _, tr = solve_flow(p, "gss")
    write_trace(tr, tmp_path / "t.csv")
    assert np.isnan(read_trace(tmp_path / "t.csv")["err_norm"]).all()


def test_report_records(tmp_path):
    rep = Report("demo")
    assert rep.passed and rep.failures() == []
    rep.check_le("a", 1.0, 2.0)
    rep.check_within("b", 1.05, 1.0, 0.1)
    rep.check("c", False, observed=np.float64(3.0))
    rep.check_le("d", float("inf"), 1.0)
    assert not rep.passed and [a.name for a in rep.failures()] == ["c", "d"]
    rep.save(tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["pass"] is False
    assert set(doc["assertions"][0]) == {"name", "expected", "observed", "tolerance", "pass"}
    assert doc["assertions"][3]["observed"] == "inf"
    other = Report("x", seconds=1.0)
    other.check("e", True)
    rep.extend(other)
    assert len(rep.assertions) == 5 and rep.seconds == 1.0
