"""End-to-end synthesis: build, solve, recover gains, verify."""
from __future__ import annotations

import logging

import numpy as np

from ..core.io import dictionary_hash
from ..core.representation import DEFAULT_RANK_TOL, build_data_matrices
from ..core.scheduling import rescale_dictionary, rescale_scheduling
from ..core.types import ControllerGains, DataDictionary, DataMatrices, ScheduleBox
from ..errors import IllConditionedError, InfeasibleError, NumericalFailure
from ..sdp import FEAS_TOL, GAP_TOL, solve
from .programs import FAMILY_GAUGE, FAMILY_OBJECTIVE, build_program
from .result import Multiplier, SynthesisResult
from .verify import verify_certificate

log = logging.getLogger(__name__)

Z_COND_TOL = 1e-9
COST_SCALE_LADDER = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)


def recover_gains(Z: np.ndarray, Y: np.ndarray, n_p: int) -> ControllerGains:
    """``K0 = Y0 Z^-1`` and ``Kbar = Ybar (I ⊗ Z)^-1``.

    Raises:
        IllConditionedError: ``sigma_min(Z) <= 1e-9 sigma_max(Z)``.
    """
    Z = np.asarray(Z, dtype=float)
    s = np.linalg.svd(Z, compute_uv=False)
    if s[-1] <= Z_COND_TOL * s[0]:
        raise IllConditionedError(f"Z is numerically singular (sigma_min/sigma_max = {s[-1] / s[0]:.2e})")
    n_x = Z.shape[0]
    Y0, Ybar = Y[:, :n_x], Y[:, n_x:]
    K0 = np.linalg.solve(Z.T, Y0.T).T
    Kbar = np.linalg.solve(np.kron(np.eye(n_p), Z).T, Ybar.T).T if n_p else np.zeros((Y.shape[0], 0))
    return ControllerGains(K0, Kbar)


def _prepare(data, box, rescale):
    """Return (DataMatrices, box, scheduling map or None, dictionary hash)."""
    if isinstance(data, DataDictionary):
        d = data
        if box is not None and box != d.box:
            d = DataDictionary(d.u, d.p, d.x, box, d.Ts, d.provenance)
        digest = dictionary_hash(d)
        smap = None
        if rescale:
            smap = rescale_scheduling(d.box)
            d = rescale_dictionary(d, smap)
        return build_data_matrices(d), d.box, smap, digest
    if isinstance(data, DataMatrices):
        if box is None:
            raise ValueError("a scheduling box is required when passing data matrices")
        return data, box, None, None
    raise TypeError("data must be a DataDictionary or DataMatrices")


def _solve_normalized(build, kind, cost_scale, solver, feas_tol, gap_tol):
    """Solve, walking a decade ladder of cost scales for the quadratic program.

    With ``cost_scale="auto"`` the quadratic program is tried at
    ``s = 1, 0.1, 0.01, ...`` and the first verified optimum is kept. Every
    scale poses an equivalent program, so the ladder only trades conditioning;
    an infeasibility verdict is returned only when no rung solves.
    Returns ``(SynthesisProgram, Solution, s, attempts)``.
    """
    if kind == "qp" and cost_scale == "auto":
        ladder = COST_SCALE_LADDER
    else:
        ladder = (1.0 if kind != "qp" else float(cost_scale),)
    attempts = []
    infeasible = None
    for s in ladder:
        sp = build(s)
        sol = solve(sp.program, feas_tol=feas_tol, gap_tol=gap_tol, solver=solver)
        attempts.append({"cost_scale": s, "status": sol.status,
                         "solver_status": sol.info.get("solver_status")})
        if sol.ok:
            return sp, sol, s, attempts
        if sol.status == "infeasible" and infeasible is None:
            infeasible = (sp, sol, s)
    # every rung poses the same program, so one infeasibility verdict speaks for all
    if infeasible is not None:
        return (*infeasible, attempts)
    return sp, sol, s, attempts


def _diagnose(program, feas_tol, gap_tol, solver) -> dict:
    out = {}
    for fam in program.families:
        if fam in (FAMILY_OBJECTIVE, FAMILY_GAUGE):
            continue
        st = solve(program.without(fam), feas_tol=feas_tol, gap_tol=gap_tol, solver=solver).status
        out[fam] = "feasible without it" if st == "optimal" else f"still {st} without it"
    return out


def synthesize(kind: str, data, weights, box: ScheduleBox | None = None, *, rescale: bool = True,
               objective: str = "trace_inverse", project_data: bool = True,
               eps: float | None = None, cost_scale="auto", solver=None,
               feas_tol: float = FEAS_TOL, gap_tol: float = GAP_TOL,
               rank_tol: float = DEFAULT_RANK_TOL, verify: bool = True) -> SynthesisResult:
    """Synthesize a gain-scheduled state feedback directly from data.

    Args:
        kind: ``"qp"`` (quadratic performance) or ``"l2"`` (L2 gain).
        data: a :class:`DataDictionary` (preferred) or prebuilt
            :class:`DataMatrices`.
        weights: :class:`QuadraticWeights` or :class:`L2Weights`.
        box: scheduling box; defaults to the dictionary's box.
        rescale: synthesize in coordinates where the box is ``[-1, 1]^n_p``
            (only for dictionaries). The result carries the map.
        cost_scale: ``"auto"`` or a positive number; see
            :func:`~ddlpv.synthesis.programs.build_qp_program`.

    Raises:
        IllPosedError: data not persistently exciting.
        InfeasibleError: infeasible even with the margin relaxed; carries a
            per-family diagnosis.
        IllConditionedError: the certificate ``Z`` is numerically singular.
        NumericalFailure: the solver failed or its answer did not verify.
    """
    m, box, smap, digest = _prepare(data, box, rescale)

    def build(s, eps_=eps):
        return build_program(kind, m, weights, box, objective=objective, project_data=project_data,
                             eps=eps_, rank_tol=rank_tol, cost_scale=s)

    sp, sol, s, attempts = _solve_normalized(build, kind, cost_scale, solver, feas_tol, gap_tol)
    info = {"attempts": attempts}
    if sol.status == "infeasible":
        relaxed = sp.program.with_eps_scaled(0.1)
        sol = solve(relaxed, feas_tol=feas_tol, gap_tol=gap_tol, solver=solver)
        info["eps_relaxed"] = True
        if sol.status == "infeasible":
            diagnosis = _diagnose(relaxed, feas_tol, gap_tol, solver)
            culprits = [f for f, v in diagnosis.items() if v.startswith("feasible")]
            raise InfeasibleError(
                f"{kind} synthesis is infeasible; constraint families whose removal restores "
                f"feasibility: {culprits or 'none'}", diagnosis)
    if not sol.ok:
        raise NumericalFailure(
            f"{kind} synthesis failed: status {sol.status} "
            f"(solver: {sol.info.get('solver_status')}, lmi residual {sol.lmi_residual:.2e}, "
            f"equality residual {sol.equality_residual:.2e})")

    Z = s * sol[sp.Z]
    Y = s * sol[sp.Y]
    FQ = s * sol[sp.FQ]
    Xi = s * sol[sp.Xi]
    gamma = float(sol[sp.gamma][0, 0]) if sp.gamma is not None else None
    gains = recover_gains(Z, Y, m.n_p)
    if kind == "qp":
        obj = sol.objective / s if objective == "trace_inverse" else sol.objective * s
    else:
        obj = sol.objective

    result = SynthesisResult(
        kind=kind, gains=gains, Z=Z, Y=Y, F_Q=FQ, multiplier=Multiplier.from_full(Xi),
        gamma=gamma, objective=float(obj),
        residuals={"solver_lmi": sol.lmi_residual, "solver_equality": sol.equality_residual},
        scheduling_map=smap, cost_scale=s,
        options={"objective": objective if kind == "qp" else "gamma+lam*trace(Z)",
                 "project_data": project_data, "eps": eps, "rank_tol": rank_tol,
                 "box": box.to_dict()},
        dictionary_hash=digest, weights=weights.to_dict(),
        solver_info={"name": sol.info.get("solver"), "status": sol.info.get("solver_status"), **info},
    )
    if verify:
        rep = verify_certificate(result, m, box, feas_tol=feas_tol)
        result.residuals.update(rep.to_dict())
        if not rep.passed:
            raise NumericalFailure(f"certificate re-verification failed: {rep.failures}")
    return result
