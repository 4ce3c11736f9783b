"""Semidefinite programs with LMI and equality constraints.

A :class:`ConicProgram` is compiled into a standard form (linear objective,
linear equalities, PSD blocks) and handed to a solver adapter. The returned
point is re-checked by evaluating every constraint directly from its terms
and taking eigenvalues, which shares no code with the compiled form.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError
from .expr import AffineMatrixExpr, MatrixVariable, as_expr

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
GAP_TOL = 1e-8
DEFAULT_EPS_REL = 1e-6

_SENSES = {"<": "<", "≺": "<", "<=": "<=", "⪯": "<=", ">": ">", "≻": ">", ">=": ">=", "⪰": ">="}


@dataclass
class LmiConstraint:
    expr: AffineMatrixExpr
    sense: str
    eps: float
    name: str
    family: str | None = None

    @property
    def sign(self) -> float:
        """+1 if the constraint reads ``expr ⪯ -eps I``, -1 for ``⪰ eps I``."""
        return 1.0 if self.sense in ("<", "<=") else -1.0

    @property
    def size(self) -> int:
        return self.expr.shape[0]


@dataclass
class EqualityConstraint:
    expr: AffineMatrixExpr
    name: str
    family: str | None = None


@dataclass
class StandardForm:
    """``min c @ x + c0`` s.t. ``A_eq @ x == b_eq`` and each
    ``mat(h_i + F_i @ x) ⪰ 0`` (full column-major ``vec`` of ``n_i x n_i``)."""

    c: np.ndarray
    c0: float
    A_eq: np.ndarray
    b_eq: np.ndarray
    psd: list  # of (n_i, h_i, F_i)

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class Solution:
    """Outcome of :func:`solve`.

    ``lmi_residual`` is the largest eigenvalue of ``sign * expr + eps I`` over
    all LMIs, relative to ``max(1, magnitude)`` of the expression, so values
    ``<= feas_tol`` mean the constraint holds with its margin. ``equality_residual``
    is the Frobenius norm of each equality, relative in the same way.
    """

    status: str
    values: dict = field(default_factory=dict)
    objective: float = float("nan")
    lmi_residual: float = float("nan")
    equality_residual: float = float("nan")
    info: dict = field(default_factory=dict)

    def __getitem__(self, var):
        if isinstance(var, MatrixVariable):
            return self.values[var.name]
        return self.values[var]

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class ConicProgram:
    """Container for variables, constraints and a linear objective."""

    def __init__(self, name: str = "program"):
        self.name = name
        self.variables: list[MatrixVariable] = []
        self.lmis: list[LmiConstraint] = []
        self.equalities: list[EqualityConstraint] = []
        self.objective: AffineMatrixExpr | None = None

    def add_variable(self, shape, symmetric: bool = False, name: str | None = None) -> MatrixVariable:
        if name is not None and any(v.name == name for v in self.variables):
            raise ValueError(f"duplicate variable name {name!r}")
        v = MatrixVariable(shape, symmetric, name=name)
        self.variables.append(v)
        return v

    def _check_declared(self, e: AffineMatrixExpr, what: str):
        declared = {v.id for v in self.variables}
        for v in e.variables():
            if v.id not in declared:
                raise ValueError(f"{what} uses undeclared variable {v.name}")

    def add_lmi(self, expr, sense: str = "<", eps: float | None = None, name: str | None = None,
                family: str | None = None) -> LmiConstraint:
        """Record ``expr ≺ 0`` (or the chosen sense).

        Strict senses are realized as ``expr ⪯ -eps I`` / ``expr ⪰ eps I``;
        the default ``eps`` is ``1e-6 * max(1, ||constant||_2)``.
        """
        e = as_expr(expr)
        if e.shape[0] != e.shape[1]:
            raise DimensionError(f"LMI expression must be square, got {e.shape}")
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        sense = _SENSES[sense]
        self._check_declared(e, "LMI")
        if sense in ("<", ">"):
            if eps is None:
                scale = np.linalg.norm(e.constant, 2) if e.constant.size else 0.0
                eps = DEFAULT_EPS_REL * max(1.0, scale)
            if eps <= 0:
                raise ValueError("a strict inequality needs eps > 0")
        else:
            eps = 0.0 if eps is None else float(eps)
        c = LmiConstraint(e, sense, float(eps), name or f"lmi{len(self.lmis)}", family)
        self.lmis.append(c)
        return c

    def add_equality(self, expr, name: str | None = None, family: str | None = None):
        e = as_expr(expr)
        self._check_declared(e, "equality")
        c = EqualityConstraint(e, name or f"eq{len(self.equalities)}", family)
        self.equalities.append(c)
        return c

    def set_objective(self, expr):
        """Minimize a ``1 x 1`` expression."""
        e = as_expr(expr)
        if e.shape != (1, 1):
            raise DimensionError("the objective must be a 1x1 expression")
        self._check_declared(e, "objective")
        self.objective = e

    def without(self, family: str) -> "ConicProgram":
        """Shallow copy with every constraint of ``family`` removed."""
        q = ConicProgram(f"{self.name}-without-{family}")
        q.variables = list(self.variables)
        q.lmis = [c for c in self.lmis if c.family != family]
        q.equalities = [c for c in self.equalities if c.family != family]
        q.objective = self.objective
        return q

    def with_eps_scaled(self, factor: float) -> "ConicProgram":
        q = ConicProgram(self.name)
        q.variables = list(self.variables)
        q.lmis = [LmiConstraint(c.expr, c.sense, c.eps * factor, c.name, c.family) for c in self.lmis]
        q.equalities = list(self.equalities)
        q.objective = self.objective
        return q

    @property
    def families(self) -> list:
        seen = []
        for c in [*self.lmis, *self.equalities]:
            if c.family and c.family not in seen:
                seen.append(c.family)
        return seen

    def offsets(self) -> tuple[dict, int]:
        off, n = {}, 0
        for v in self.variables:
            off[v.id] = n
            n += v.size
        return off, n

    def standard_form(self) -> StandardForm:
        off, n = self.offsets()
        if self.objective is None:
            c, c0 = np.zeros(n), 0.0
        else:
            cv, A = self.objective.compile(off, n)
            c, c0 = A[0], float(cv[0])
        A_rows, b_rows = [], []
        for eq in self.equalities:
            cv, A = eq.expr.compile(off, n)
            A_rows.append(A)
            b_rows.append(-cv)
        A_eq = np.vstack(A_rows) if A_rows else np.zeros((0, n))
        b_eq = np.concatenate(b_rows) if b_rows else np.zeros(0)
        psd = []
        for lmi in self.lmis:
            m = lmi.size
            cv, A = lmi.expr.compile(off, n)
            # -sign * expr - eps I ⪰ 0, symmetrized
            h = -lmi.sign * cv - lmi.eps * np.eye(m).ravel(order="F")
            F = -lmi.sign * A
            h = 0.5 * (h + h.reshape(m, m, order="F").T.ravel(order="F"))
            F = 0.5 * (F + F.reshape(m, m, n, order="F").transpose(1, 0, 2).reshape(m * m, n, order="F"))
            psd.append((m, h, F))
        return StandardForm(c, c0, A_eq, b_eq, psd)

    def unpack(self, x: np.ndarray) -> dict:
        off, _ = self.offsets()
        return {v.name: v.from_dof(x[off[v.id]:off[v.id] + v.size]) for v in self.variables}


def lmi_residuals(program: ConicProgram, values: dict) -> dict:
    """Relative margin violation of every LMI (see :class:`Solution`)."""
    out = {}
    for lmi in program.lmis:
        M = lmi.expr.evaluate(values)
        asym = np.linalg.norm(M - M.T)
        Ms = lmi.sign * 0.5 * (M + M.T)
        top = float(np.linalg.eigvalsh(Ms)[-1]) + lmi.eps
        scale = max(1.0, lmi.expr.magnitude(values))
        out[lmi.name] = max(top, asym) / scale
    return out


def equality_residuals(program: ConicProgram, values: dict) -> dict:
    out = {}
    for eq in program.equalities:
        r = np.linalg.norm(eq.expr.evaluate(values))
        out[eq.name] = float(r / max(1.0, eq.expr.magnitude(values)))
    return out


def solve(program: ConicProgram, feas_tol: float = FEAS_TOL, gap_tol: float = GAP_TOL,
          solver=None) -> Solution:
    """Solve ``program`` and verify the answer independently.

    Args:
        solver: adapter instance or name (``"clarabel"``, ``"cvxopt"``);
            defaults to :func:`~ddlpv.sdp.adapters.default_adapter`.

    Returns:
        A :class:`Solution`. ``optimal`` is only reported when the solver
        claims success and every residual re-check passes ``feas_tol``.
    """
    from .adapters import get_adapter

    adapter = get_adapter(solver)
    # constraints without decision variables are settled here, not by the solver
    for lmi in program.lmis:
        if not lmi.expr.terms and lmi_residuals(_only(program, lmi), {})[lmi.name] > feas_tol:
            return Solution("infeasible", info={"solver": "none", "solver_status": "constant LMI violated",
                                                "constraint": lmi.name})
    program = _drop_constant_lmis(program)
    sf = program.standard_form()
    raw = adapter.solve(sf, feas_tol=feas_tol, gap_tol=gap_tol)
    info = {"solver": adapter.name, "solver_status": raw.solver_status, **raw.info}
    if raw.status == "infeasible":
        return Solution("infeasible", info=info)
    if raw.x is None:
        return Solution("numerical-failure", info=info)
    values = program.unpack(raw.x)
    lr = lmi_residuals(program, values)
    er = equality_residuals(program, values)
    worst_l = max(lr.values(), default=-np.inf)
    worst_e = max(er.values(), default=0.0)
    obj = float(sf.c @ raw.x + sf.c0)
    info.update(lmi_residuals=lr, equality_residuals=er)
    status = "optimal"
    if raw.status not in ("solved", "almost"):
        status = "numerical-failure"
    elif worst_l > feas_tol or worst_e > feas_tol:
        log.debug("residual re-check failed: lmi %.2e, eq %.2e", worst_l, worst_e)
        status = "numerical-failure"
    return Solution(status, values, obj, float(worst_l), float(worst_e), info)


def _only(program: ConicProgram, lmi: LmiConstraint) -> ConicProgram:
    q = ConicProgram(program.name)
    q.lmis = [lmi]
    return q


def _drop_constant_lmis(program: ConicProgram) -> ConicProgram:
    if all(c.expr.terms for c in program.lmis):
        return program
    q = ConicProgram(program.name)
    q.variables = list(program.variables)
    q.lmis = [c for c in program.lmis if c.expr.terms]
    q.equalities = list(program.equalities)
    q.objective = program.objective
    return q
