"""Interior-point solver adapters.

Each adapter takes a :class:`~ddlpv.sdp.program.StandardForm` and returns a
:class:`RawResult`. Clarabel is the default; cvxopt is available as a
cross-check. ``DDLPV_SOLVER`` selects the default by name.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .vec import svec_operator


@dataclass
class RawResult:
    status: str  # solved | almost | infeasible | failed
    x: np.ndarray | None
    solver_status: str
    info: dict = field(default_factory=dict)


class ClarabelAdapter:
    name = "clarabel"

    def solve(self, sf, feas_tol: float, gap_tol: float) -> RawResult:
        import clarabel

        n = sf.n
        A_blocks, b_blocks, cones = [], [], []
        if sf.A_eq.shape[0]:
            A_blocks.append(sf.A_eq)
            b_blocks.append(sf.b_eq)
            cones.append(clarabel.ZeroConeT(sf.A_eq.shape[0]))
        for m, h, F in sf.psd:
            S = svec_operator(m)
            # s = b - A x = svec(h + F x)
            A_blocks.append(-(S @ F))
            b_blocks.append(S @ h)
            cones.append(clarabel.PSDTriangleConeT(m))
        A = sp.csc_matrix(np.vstack(A_blocks)) if A_blocks else sp.csc_matrix((0, n))
        b = np.concatenate(b_blocks) if b_blocks else np.zeros(0)
        P = sp.csc_matrix((n, n))
        st = clarabel.DefaultSettings()
        st.verbose = False
        st.tol_gap_abs = gap_tol
        st.tol_gap_rel = gap_tol
        st.tol_feas = min(1e-8, 0.1 * feas_tol)
        st.max_iter = 500
        sol = clarabel.DefaultSolver(P, sf.c, A, b, cones, st).solve()
        status = str(sol.status)
        info = {"iterations": int(sol.iterations)}
        if status in ("Solved",):
            return RawResult("solved", np.array(sol.x), status, info)
        if status in ("AlmostSolved", "MaxIterations", "InsufficientProgress"):
            x = np.array(sol.x)
            return RawResult("almost" if np.all(np.isfinite(x)) else "failed",
                             x if np.all(np.isfinite(x)) else None, status, info)
        if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
            # a near-certificate of infeasibility; the caller still re-checks with a relaxed margin
            return RawResult("infeasible", None, status, info)
        return RawResult("failed", None, status, info)


class CvxoptAdapter:
    name = "cvxopt"

    def solve(self, sf, feas_tol: float, gap_tol: float) -> RawResult:
        from cvxopt import matrix, solvers

        A_eq, b_eq = _independent_rows(sf.A_eq, sf.b_eq)
        kw = {}
        if A_eq.shape[0]:
            kw["A"] = matrix(A_eq)
            kw["b"] = matrix(b_eq)
        Gs = [matrix(-F) for _, _, F in sf.psd]
        hs = [matrix(h.reshape(m, m, order="F")) for m, h, _ in sf.psd]
        opts = {"show_progress": False, "abstol": gap_tol, "reltol": gap_tol,
                "feastol": min(1e-8, 0.1 * feas_tol), "maxiters": 200}
        try:
            res = solvers.sdp(matrix(sf.c), Gs=Gs, hs=hs, options=opts, **kw)
        except (ValueError, ArithmeticError) as exc:
            return RawResult("failed", None, f"error: {exc}")
        status = res["status"]
        if status == "primal infeasible":
            return RawResult("infeasible", None, status)
        if res["x"] is None:
            return RawResult("failed", None, status)
        x = np.array(res["x"]).ravel()
        return RawResult("solved" if status == "optimal" else "almost", x, status)


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Drop linearly dependent equality rows (cvxopt needs full row rank)."""
    if A.shape[0] == 0:
        return A, b
    import scipy.linalg as sla

    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    keep = np.sort(piv[: int(np.sum(d > tol * max(d[0], 1.0)))])
    return A[keep], b[keep]


_ADAPTERS = {"clarabel": ClarabelAdapter, "cvxopt": CvxoptAdapter}


def available_adapters() -> list:
    return sorted(_ADAPTERS)


def default_adapter():
    return get_adapter(os.environ.get("DDLPV_SOLVER", "clarabel"))


def get_adapter(solver=None):
    if solver is None:
        return default_adapter()
    if isinstance(solver, str):
        try:
            return _ADAPTERS[solver.lower()]()
        except KeyError:
            raise ValueError(f"unknown solver {solver!r}; choose from {available_adapters()}") from None
    return solver
