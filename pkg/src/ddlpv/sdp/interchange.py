"""JSON dump/load of conic programs, with matrices as sparse triplets."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .expr import AffineMatrixExpr, MatrixVariable, Term
from .program import ConicProgram, EqualityConstraint, LmiConstraint

FORMAT = "ddlpv-conic-program/1"


def _triplets(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    r, c = np.nonzero(M)
    return {"shape": list(M.shape), "i": r.tolist(), "j": c.tolist(), "v": M[r, c].tolist()}


def _dense(t: dict) -> np.ndarray:
    M = np.zeros(t["shape"])
    M[t["i"], t["j"]] = t["v"]
    return M


def _expr_to_json(e: AffineMatrixExpr) -> dict:
    return {
        "constant": _triplets(e.constant),
        "terms": [{"var": t.var.id, "L": _triplets(t.L), "R": _triplets(t.R),
                   "transposed": t.transposed} for t in e.terms],
    }


def _expr_from_json(d: dict, vars_by_id: dict) -> AffineMatrixExpr:
    terms = [Term(_dense(t["L"]), vars_by_id[t["var"]], _dense(t["R"]), bool(t["transposed"]))
             for t in d["terms"]]
    return AffineMatrixExpr(_dense(d["constant"]), terms)


def program_to_dict(program: ConicProgram, include_standard_form: bool = False) -> dict:
    out = {
        "format": FORMAT,
        "name": program.name,
        "variables": [{"id": v.id, "name": v.name, "shape": list(v.shape),
                       "symmetric": v.symmetric} for v in program.variables],
        "lmis": [{"name": c.name, "sense": c.sense, "eps": c.eps, "family": c.family,
                  "expr": _expr_to_json(c.expr)} for c in program.lmis],
        "equalities": [{"name": c.name, "family": c.family, "expr": _expr_to_json(c.expr)}
                       for c in program.equalities],
        "objective": None if program.objective is None else _expr_to_json(program.objective),
    }
    if include_standard_form:
        sf = program.standard_form()
        out["standard_form"] = {
            "c": sf.c.tolist(), "c0": sf.c0,
            "A_eq": _triplets(sf.A_eq) if sf.A_eq.size else {"shape": list(sf.A_eq.shape),
                                                             "i": [], "j": [], "v": []},
            "b_eq": sf.b_eq.tolist(),
            "psd": [{"n": m, "h": h.tolist(), "F": _triplets(F)} for m, h, F in sf.psd],
        }
    return out


def program_from_dict(d: dict) -> ConicProgram:
    if d.get("format") != FORMAT:
        raise ValueError(f"unsupported program format {d.get('format')!r}")
    prog = ConicProgram(d.get("name", "program"))
    # fresh ids avoid clashes with variables already alive in this process
    by_old_id = {}
    for v in d["variables"]:
        mv = MatrixVariable(v["shape"], v["symmetric"], name=v["name"])
        prog.variables.append(mv)
        by_old_id[v["id"]] = mv
    for c in d["lmis"]:
        prog.lmis.append(LmiConstraint(_expr_from_json(c["expr"], by_old_id), c["sense"],
                                       float(c["eps"]), c["name"], c.get("family")))
    for c in d["equalities"]:
        prog.equalities.append(EqualityConstraint(_expr_from_json(c["expr"], by_old_id),
                                                  c["name"], c.get("family")))
    if d.get("objective") is not None:
        prog.objective = _expr_from_json(d["objective"], by_old_id)
    return prog


def dump_program(program: ConicProgram, path, include_standard_form: bool = False) -> Path:
    path = Path(path)
    path.write_text(json.dumps(program_to_dict(program, include_standard_form)))
    return path


def load_program(path) -> ConicProgram:
    return program_from_dict(json.loads(Path(path).read_text()))
