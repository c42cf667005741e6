"""Matrix Market files, JSON problem documents, trace CSVs and reports."""

from dataclasses import dataclass, field
import csv
import json
import math
import os

import jsonschema
import numpy as np
import scipy.io as sio
import scipy.sparse as sp

from ..core import MalformedProblemError
from .generate import KINDS, ProblemSpec

__all__ = ["read_matrix", "write_matrix", "PROBLEM_SCHEMA", "load_problem",
           "dump_problem", "TRACE_COLUMNS", "write_trace", "read_trace",
           "Assertion", "Report"]

TRACE_COLUMNS = ("k", "lyapunov", "err_norm", "residual", "inner_iters", "inner_residual")

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "monosplit problem",
    "description": "Generated instance recipe.  Sizes: `dim` for the monotone "
                   "kinds, `m` and `n` for the saddle kinds.  `paths` maps "
                   "matrix names to Matrix Market files (relative paths are "
                   "resolved against the JSON file).",
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "dim": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "kappa_F": {"type": "number"},
        "kappa_Bsym": {"type": "number"},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "minimum": 0},
        "kappa_f": {"type": "number"},
        "kappa_g": {"type": "number"},
        "kappa_S": {"type": "number"},
        "mu_f": {"type": "number", "exclusiveMinimum": 0},
        "mu_g": {"type": "number", "exclusiveMinimum": 0},
        "L_S": {"type": "number", "exclusiveMinimum": 0},
        "dual_metric": {"enum": ["identity", "schur"]},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "paths": {
            "type": "object",
            "propertyNames": {"enum": ["N", "H", "B", "H_f"]},
            "additionalProperties": {"type": "string"},
        },
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["shifted_skew_linear", "quadratic_plus_skew"]}}},
         "then": {"required": ["dim"]}},
        {"if": {"properties": {"kind": {"enum": ["bilinear_saddle", "constrained_qp"]}}},
         "then": {"required": ["m", "n"]}},
    ],
}


def read_matrix(path):
    """Read a Matrix Market file as a CSR matrix."""
    return sp.csr_matrix(sio.mmread(path))


def write_matrix(path, M):
    """Write ``M`` in coordinate format with round-trip exact decimals."""
    sio.mmwrite(path, sp.coo_matrix(M), precision=17)


def load_problem(source):
    """Validate a JSON problem document and return its `ProblemSpec`.

    ``source`` is a path, a JSON string or an already parsed dict.
    """
    base = None
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        base = os.path.dirname(os.path.abspath(source))
        with open(source) as fh:
            doc = json.load(fh)
    else:
        try:
            doc = json.loads(source)
        except (TypeError, json.JSONDecodeError) as exc:
            raise MalformedProblemError(f"not a problem file or JSON document: {source!r}") from exc
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise MalformedProblemError(f"invalid problem document: {exc.message}") from exc
    doc = dict(doc)
    if base and "paths" in doc:
        doc["paths"] = {k: v if os.path.isabs(v) else os.path.join(base, v)
                        for k, v in doc["paths"].items()}
    return ProblemSpec(**doc)


def dump_problem(spec, path):
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace(trace, path):
    """Write a `ConvergenceTrace` with the fixed column set."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in zip(trace.k, trace.lyapunov, trace.err_norm, trace.residual,
                       trace.inner_iters, trace.inner_residual):
            w.writerow([_cell(v) for v in row])


def read_trace(path):
    """Columns of a trace CSV as float arrays (empty cells become NaN)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) if r[c] != "" else math.nan for r in rows])
            for c in TRACE_COLUMNS}


@dataclass
class Assertion:
    """One checked claim: ``observed`` must not exceed ``expected + tolerance``
    unless a custom verdict is given."""

    name: str
    expected: object
    observed: object
    tolerance: object
    passed: bool

    def to_dict(self):
        return {"name": self.name, "expected": _jsonable(self.expected),
                "observed": _jsonable(self.observed),
                "tolerance": _jsonable(self.tolerance), "pass": bool(self.passed)}


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


@dataclass
class Report:
    """Benchmark outcome; ``records`` holds free-form measurements."""

    suite: str
    assertions: list = field(default_factory=list)
    records: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(a.passed for a in self.assertions)

    def check_le(self, name, observed, bound, tolerance=0.0):
        a = Assertion(name, bound, observed, tolerance, bool(observed <= bound + tolerance))
        self.assertions.append(a)
        return a

    def check_within(self, name, observed, expected, tolerance):
        a = Assertion(name, expected, observed, tolerance,
                      bool(abs(observed - expected) <= tolerance))
        self.assertions.append(a)
        return a

    def check(self, name, passed, expected=True, observed=None):
        a = Assertion(name, expected, passed if observed is None else observed, None, bool(passed))
        self.assertions.append(a)
        return a

    def failures(self):
        return [a for a in self.assertions if not a.passed]

    def extend(self, other):
        self.assertions.extend(other.assertions)
        self.records.extend(other.records)
        self.seconds += other.seconds

    def to_dict(self):
        return {"suite": self.suite, "pass": self.passed, "seconds": self.seconds,
                "assertions": [a.to_dict() for a in self.assertions],
                "records": _jsonable(self.records)}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
