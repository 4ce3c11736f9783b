"""Assembly of the two data-driven synthesis programs.

``build_qp_program`` certifies a quadratic cost bound, ``build_l2_program``
an L2-gain bound from an additive state disturbance to the weighted output
``(W_S^½ x, W_R^½ u)``. Both share the multiplier conditions, the data
equality and the lifted matrix inequality; only the ``W`` block differs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.representation import DEFAULT_RANK_TOL, _require_pe, projected_xnext
from ..core.types import DataMatrices, ScheduleBox
from ..errors import DimensionError
from ..sdp import ConicProgram, MatrixVariable, bmat, kron_eye, trace
from .structure import (Dims, blocked_lhs, embed_state, fq_to_F, lifted_next_state,
                        multiplier_outer, outer_factors, row_block)
from .weights import L2Weights, QuadraticWeights, psd_sqrt

OBJECTIVES = ("trace_inverse", "trace")

FAMILY_PERFORMANCE = "performance"
FAMILY_VERTEX = "multiplier-vertex"
FAMILY_XI22 = "multiplier-positivity"
FAMILY_DATA = "data-equality"
FAMILY_LYAPUNOV = "lyapunov"
FAMILY_GAMMA = "gamma"
FAMILY_OBJECTIVE = "objective"
FAMILY_GAUGE = "gauge"


@dataclass
class SynthesisProgram:
    """A built program plus handles to its decision variables."""

    program: ConicProgram
    kind: str
    dims: Dims
    Z: MatrixVariable
    Y: MatrixVariable
    FQ: MatrixVariable
    Xi: MatrixVariable
    gamma: MatrixVariable | None
    Xnext: np.ndarray  # the next-state data actually used in W
    G: np.ndarray
    box: ScheduleBox
    weights: object
    options: dict = field(default_factory=dict)


def null_space_basis(G: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the right null space of ``G`` (same rank rule as the PE test)."""
    _, s, Vt = np.linalg.svd(G)
    r = int(np.sum(s > rank_tol * s[0])) if s.size else 0
    return Vt[r:].T


def _check(m: DataMatrices, box: ScheduleBox, weights, rank_tol):
    if box.n_p != m.n_p:
        raise DimensionError(f"box has {box.n_p} channels, data has {m.n_p}")
    if weights.n_x != m.n_x or weights.n_u != m.n_u:
        raise DimensionError("weight dimensions do not match the data")
    _require_pe(m, rank_tol)


def _common(m: DataMatrices, box: ScheduleBox, kind: str, project_data: bool, eps, rank_tol,
            name: str):
    d = Dims.of(m)
    prog = ConicProgram(name)
    Z = prog.add_variable((d.n_x, d.n_x), symmetric=True, name="Z")
    Y = prog.add_variable((d.n_u, d.n_lift), name="Y")
    FQ = prog.add_variable((d.N_d * (1 + d.n_p), d.n_lift), name="F_Q")
    Xi = prog.add_variable((2 * d.n_xi, 2 * d.n_xi), symmetric=True, name="Xi")
    Xn = projected_xnext(m, rank_tol) if project_data else np.array(m.Xnext)

    # (b) multiplier: negative on the vertices, positive lower-right block
    for k, v in enumerate(box.vertices()):
        H = multiplier_outer(v, d.n_x)
        prog.add_lmi(H.T @ Xi @ H, "<=", name=f"vertex{k}", family=FAMILY_VERTEX)
    S22 = np.vstack([np.zeros((d.n_xi, d.n_xi)), np.eye(d.n_xi)])
    prog.add_lmi(S22.T @ Xi @ S22, ">", eps=eps, name="xi22", family=FAMILY_XI22)

    # (c) data equality
    prog.add_equality(blocked_lhs(Z, Y, d) - m.G @ fq_to_F(FQ, d), name="data",
                      family=FAMILY_DATA)
    if project_data:
        # with projected data, components of F_Q in null(G) enter no constraint;
        # pin them to zero so the program has no free direction
        N = null_space_basis(m.G, rank_tol)
        if N.shape[1]:
            for i in range(1 + d.n_p):
                prog.add_equality(N.T @ row_block(d, i) @ FQ, name=f"gauge{i}", family=FAMILY_GAUGE)
    return d, prog, Z, Y, FQ, Xi, Xn


def _lifted_lmi(prog, d, kind, Xi, W, eps):
    R1, R2 = outer_factors(d, kind)
    if W.shape != (R2.shape[0], R2.shape[0]):
        raise DimensionError(f"W has shape {W.shape}, outer factor expects {R2.shape[0]}")
    prog.add_lmi(R1.T @ Xi @ R1 + R2.T @ W @ R2, ">", eps=eps, name="lifted",
                 family=FAMILY_PERFORMANCE)


def qp_W(Z, Y, FQ, Xnext, d: Dims, weights: QuadraticWeights):
    """``W`` for the quadratic-performance program (expression form)."""
    E = embed_state(d)
    XF = lifted_next_state(Xnext, d) @ FQ
    Z0 = E @ Z @ E.T
    Qh, Rh = psd_sqrt(weights.Q), psd_sqrt(weights.R)
    return bmat([
        [Z0, XF.T, E @ Z @ Qh, Y.T @ Rh],
        [XF, Z0, None, None],
        [Qh @ Z @ E.T, None, np.eye(d.n_x), None],
        [Rh @ Y, None, None, np.eye(d.n_u)],
    ])


def l2_W(Z, Y, FQ, gamma, Xnext, d: Dims, weights: L2Weights):
    """``W`` for the L2-gain program (expression form)."""
    E = embed_state(d)
    XF = lifted_next_state(Xnext, d) @ FQ
    Z0 = E @ Z @ E.T
    Sh, Rh = psd_sqrt(weights.W_S), psd_sqrt(weights.W_R)
    return bmat([
        [Z0, XF.T, E @ Z @ Sh, Y.T @ Rh, None],
        [XF, Z0, None, None, E],
        [Sh @ Z @ E.T, None, kron_eye(d.n_x, gamma), None, None],
        [Rh @ Y, None, None, kron_eye(d.n_u, gamma), None],
        [None, E.T, None, None, kron_eye(d.n_x, gamma)],
    ])


def build_qp_program(m: DataMatrices, weights: QuadraticWeights, box: ScheduleBox, *,
                     objective: str = "trace_inverse", project_data: bool = True,
                     eps: float | None = None, rank_tol: float = DEFAULT_RANK_TOL,
                     cost_scale: float = 1.0) -> SynthesisProgram:
    """Quadratic-performance synthesis program.

    Args:
        objective: ``"trace_inverse"`` minimizes ``trace(Z^-1)`` through an
            auxiliary variable (a bound on the quadratic cost from unit initial
            states); ``"trace"`` minimizes ``trace(Z)``.
        project_data: replace the next-state data by its projection onto the
            row space of the regressor data, so noise outside that space
            cannot be exploited by the solver.
        eps: strictness margin; ``None`` uses the backend default.
        cost_scale: multiplies ``Q`` and ``R``. The program with weights
            ``s Q, s R`` has the solutions ``(Z, Y, F_Q, Xi) / s`` of the
            original one (the lifted inequality transforms by congruence), so
            ``s`` only conditions the numerics and leaves the gains unchanged.

    Raises:
        IllPosedError: the data are not persistently exciting.
        DimensionError: weights, box and data disagree.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    _check(m, box, weights, rank_tol)
    if not cost_scale > 0:
        raise ValueError("cost_scale must be positive")
    d, prog, Z, Y, FQ, Xi, Xn = _common(m, box, "qp", project_data, eps, rank_tol, "qp")
    scaled = QuadraticWeights(cost_scale * weights.Q, cost_scale * weights.R)
    _lifted_lmi(prog, d, "qp", Xi, qp_W(Z, Y, FQ, Xn, d, scaled), eps)
    if objective == "trace_inverse":
        Xa = prog.add_variable((d.n_x, d.n_x), symmetric=True, name="Z_inv_bound")
        I = np.eye(d.n_x)
        prog.add_lmi(bmat([[Xa, I], [I, Z]]), ">=", name="inverse_bound", family=FAMILY_OBJECTIVE)
        prog.set_objective(trace(Xa))
    else:
        prog.set_objective(trace(Z))
    return SynthesisProgram(prog, "qp", d, Z, Y, FQ, Xi, None, Xn, np.array(m.G), box, weights,
                            {"objective": objective, "project_data": project_data, "eps": eps,
                             "cost_scale": cost_scale})


def build_l2_program(m: DataMatrices, weights: L2Weights, box: ScheduleBox, *,
                     project_data: bool = True, eps: float | None = None,
                     rank_tol: float = DEFAULT_RANK_TOL) -> SynthesisProgram:
    """L2-gain synthesis program; minimizes ``gamma + lam * trace(Z)``."""
    _check(m, box, weights, rank_tol)
    d, prog, Z, Y, FQ, Xi, Xn = _common(m, box, "l2", project_data, eps, rank_tol, "l2")
    gamma = prog.add_variable((1, 1), symmetric=True, name="gamma")
    prog.add_lmi(Z, ">", eps=eps, name="Z_pos", family=FAMILY_LYAPUNOV)
    prog.add_lmi(gamma, ">", eps=eps, name="gamma_pos", family=FAMILY_GAMMA)
    _lifted_lmi(prog, d, "l2", Xi, l2_W(Z, Y, FQ, gamma, Xn, d, weights), eps)
    prog.set_objective(gamma + weights.lam * trace(Z))
    return SynthesisProgram(prog, "l2", d, Z, Y, FQ, Xi, gamma, Xn, np.array(m.G), box, weights,
                            {"project_data": project_data, "eps": eps})


def build_program(kind: str, m, weights, box, **opts) -> SynthesisProgram:
    if kind == "qp":
        return build_qp_program(m, weights, box, **opts)
    if kind == "l2":
        opts.pop("objective", None)
        opts.pop("cost_scale", None)
        return build_l2_program(m, weights, box, **opts)
    raise ValueError(f"unknown synthesis kind {kind!r} (expected 'qp' or 'l2')")
