"""A-posteriori checks of synthesis certificates and closed-loop stability.

The certificate check rebuilds every matrix with plain numpy slicing rather
than through the expression layer used to pose the program.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core.representation import (DEFAULT_RANK_TOL, dd_closed_loop_map, lifted_basis,
                                   projected_xnext)
from ..core.types import DataMatrices, ScheduleBox, as_gains
from .structure import multiplier_outer, outer_factors
from .weights import psd_sqrt

RECOVERY_TOL = 1e-10
FQ_IDENTITY_TOL = 1e-12


@dataclass
class CertificateReport:
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {**self.checks, "certificate_passed": self.passed, "certificate_failures": self.failures}


def _F_from_blocks(FQ, n_x, n_p, N_d):
    blk = lambda i, j: FQ[i * N_d:(i + 1) * N_d, j * n_x:(j + 1) * n_x]  # noqa: E731
    parts = [blk(0, 0)] + [blk(0, j) + blk(j, 0) for j in range(1, n_p + 1)]
    parts += [blk(i, j) for i in range(1, n_p + 1) for j in range(1, n_p + 1)]
    return np.hstack(parts)


def _blocked(Z, Y, n_x, n_u, n_p):
    Y0, Yb = Y[:, :n_x], Y[:, n_x:]
    out = np.zeros((n_x + n_x * n_p + n_u + n_u * n_p, n_x * (1 + n_p + n_p * n_p)))
    r1, r2, r3 = n_x, n_x + n_x * n_p, n_x + n_x * n_p + n_u
    c1, c2 = n_x, n_x + n_x * n_p
    out[:r1, :c1] = Z
    out[r2:r3, :c1] = Y0
    out[r2:r3, c1:c2] = Yb
    for i in range(n_p):
        out[r1 + i * n_x:r1 + (i + 1) * n_x, c1 + i * n_x:c1 + (i + 1) * n_x] = Z
        out[r3 + i * n_u:r3 + (i + 1) * n_u, c1 + i * n_x:c1 + (i + 1) * n_x] = Y0
        out[r3 + i * n_u:r3 + (i + 1) * n_u, c2 + i * n_x * n_p:c2 + (i + 1) * n_x * n_p] = Yb
    return out


def _W(kind, Z, Y, FQ, gamma, Xnext, n_x, n_u, n_p, weights: dict):
    nl = n_x * (1 + n_p)
    N_d = Xnext.shape[1]
    XF = np.zeros((nl, nl))
    for i in range(1 + n_p):
        XF[i * n_x:(i + 1) * n_x, :] = Xnext @ FQ[i * N_d:(i + 1) * N_d, :]
    Z0 = np.zeros((nl, nl))
    Z0[:n_x, :n_x] = Z
    if kind == "qp":
        Qh, Rh = psd_sqrt(np.array(weights["Q"])), psd_sqrt(np.array(weights["R"]))
        nz = n_x + n_u
        W = np.zeros((2 * nl + nz, 2 * nl + nz))
        W[:nl, :nl] = Z0
        W[nl:2 * nl, nl:2 * nl] = Z0
        W[nl:2 * nl, :nl] = XF
        W[:nl, nl:2 * nl] = XF.T
        W[:n_x, 2 * nl:2 * nl + n_x] = Z @ Qh
        W[:nl, 2 * nl + n_x:] = Y.T @ Rh
        W[2 * nl:, 2 * nl:] = np.eye(nz)
    else:
        Sh, Rh = psd_sqrt(np.array(weights["W_S"])), psd_sqrt(np.array(weights["W_R"]))
        nz = 2 * n_x + n_u
        W = np.zeros((2 * nl + nz, 2 * nl + nz))
        W[:nl, :nl] = Z0
        W[nl:2 * nl, nl:2 * nl] = Z0
        W[nl:2 * nl, :nl] = XF
        W[:nl, nl:2 * nl] = XF.T
        a = 2 * nl
        W[:n_x, a:a + n_x] = Z @ Sh
        W[:nl, a + n_x:a + n_x + n_u] = Y.T @ Rh
        W[nl:nl + n_x, a + n_x + n_u:] = np.eye(n_x)
        W[a:, a:] = gamma * np.eye(nz)
    iu = np.triu_indices_from(W, 1)
    W.T[iu] = W[iu]  # complete the lower triangle by symmetry
    return W


def verify_certificate(result, m: DataMatrices, box: ScheduleBox, feas_tol: float = 1e-7,
                       n_random: int = 50, seed: int = 0,
                       rank_tol: float = DEFAULT_RANK_TOL) -> CertificateReport:
    """Re-check every condition of a solved program outside the solver.

    ``result`` must hold ``Z, Y, F_Q``, the multiplier and the gains in the
    same coordinates as ``m`` and ``box``.
    """
    rep = CertificateReport()
    n_x, n_u, n_p, N_d = m.n_x, m.n_u, m.n_p, m.N_d
    Z, Y, FQ, Xi = result.Z, result.Y, result.F_Q, result.multiplier.full
    K = result.gains

    Y0, Yb = Y[:, :n_x], Y[:, n_x:]
    r0 = np.linalg.norm(Y0 - K.K0 @ Z)
    rb = np.linalg.norm(Yb - K.Kbar @ np.kron(np.eye(n_p), Z))
    rep.checks["recovery_K0"] = float(r0 / max(np.linalg.norm(Y0), 1e-300))
    rep.checks["recovery_Kbar"] = float(rb / max(np.linalg.norm(Yb), 1e-300)) if Yb.size else 0.0
    for k in ("recovery_K0", "recovery_Kbar"):
        if rep.checks[k] > RECOVERY_TOL:
            rep.failures.append(k)

    F = _F_from_blocks(FQ, n_x, n_p, N_d)
    lhs = _blocked(Z, Y, n_x, n_u, n_p)
    rhs = m.G @ F
    eq = np.linalg.norm(lhs - rhs)
    rep.checks["equality_abs"] = float(eq)
    rep.checks["equality_rel"] = float(eq / max(1.0, np.linalg.norm(lhs) + np.linalg.norm(rhs)))
    if rep.checks["equality_rel"] > feas_tol:
        rep.failures.append("equality")

    rng = np.random.default_rng(seed)
    worst_fq = 0.0
    for _ in range(20):
        p = rng.uniform(box.lower, box.upper)
        left = F @ lifted_basis(p, n_x)
        Lp = np.vstack([np.eye(N_d), np.kron(p[:, None], np.eye(N_d))])
        Rp = np.vstack([np.eye(n_x), np.kron(p[:, None], np.eye(n_x))])
        worst_fq = max(worst_fq, float(np.abs(left - Lp.T @ FQ @ Rp).max()))
    rep.checks["fq_identity"] = worst_fq
    if worst_fq > FQ_IDENTITY_TOL * max(1.0, np.abs(FQ).max()):
        rep.failures.append("fq_identity")

    xi_scale = max(1.0, np.linalg.norm(Xi, 2))
    pts = np.vstack([box.vertices(), rng.uniform(box.lower, box.upper, size=(n_random, n_p))])
    worst_v = max(float(np.linalg.eigvalsh(H.T @ Xi @ H)[-1])
                  for H in (multiplier_outer(p, n_x) for p in pts))
    rep.checks["multiplier_max_eig"] = worst_v
    if worst_v > feas_tol * xi_scale:
        rep.failures.append("multiplier")
    k = Xi.shape[0] // 2
    rep.checks["xi22_min_eig"] = float(np.linalg.eigvalsh(Xi[k:, k:])[0])
    if rep.checks["xi22_min_eig"] <= 0:
        rep.failures.append("xi22")

    opts = getattr(result, "options", {}) or {}
    Xn = projected_xnext(m, rank_tol) if opts.get("project_data", True) else np.array(m.Xnext)
    W = _W(result.kind, Z, Y, FQ, result.gamma, Xn, n_x, n_u, n_p, result.weights)
    R1, R2 = outer_factors(_dims(m), result.kind)
    L = R1.T @ Xi @ R1 + R2.T @ W @ R2
    lmin = float(np.linalg.eigvalsh(0.5 * (L + L.T))[0])
    rep.checks["lifted_min_eig"] = lmin
    rep.checks["lifted_strict"] = lmin > 0
    if lmin < -feas_tol * max(1.0, np.linalg.norm(L, 2)):
        rep.failures.append("lifted")
    rep.checks["Z_min_eig"] = float(np.linalg.eigvalsh(Z)[0])
    if rep.checks["Z_min_eig"] <= 0:
        rep.failures.append("Z_pos")
    return rep


def _dims(m):
    from .structure import Dims
    return Dims.of(m)


@dataclass
class ClosedLoopCertificate:
    grid: np.ndarray
    spectral_radii: np.ndarray
    degenerate_box: bool

    @property
    def max_spectral_radius(self) -> float:
        return float(np.max(self.spectral_radii))

    @property
    def stable(self) -> bool:
        """All frozen-scheduling closed loops are Schur stable."""
        return self.max_spectral_radius < 1.0

    def to_dict(self) -> dict:
        return {"max_spectral_radius": self.max_spectral_radius, "stable": self.stable,
                "grid_points": int(len(self.grid)), "degenerate_box": self.degenerate_box}


def certify_closed_loop(K, box: ScheduleBox, grid_n: int = 10, *, model=None,
                        data: DataMatrices | None = None, gain_map=None,
                        rank_tol: float = DEFAULT_RANK_TOL) -> ClosedLoopCertificate:
    """Frozen-scheduling spectral radii of the closed loop on a grid.

    Exactly one of ``model`` and ``data`` is used:

    * ``model``: ``(A, B)`` as :class:`AffineMatrixFunction` objects, or a
      callable ``p -> (A, B)`` (for instance a frozen linearization);
    * ``data``: data matrices; the closed loop is the data-driven map
      evaluated at frozen ``p``.

    ``gain_map`` (a :class:`SchedulingMap`) converts grid points to the
    coordinates in which ``K`` was designed.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    if (model is None) == (data is None):
        raise ValueError("pass exactly one of model= or data=")
    K = as_gains(K)
    degenerate = box.is_degenerate
    grid = box.grid(grid_n)
    if degenerate:
        warnings.warn("degenerate scheduling box: evaluating collapsed grid", stacklevel=2)
        grid = np.unique(grid, axis=0)
    radii = []
    V = dd_closed_loop_map(data, K, rank_tol).V if data is not None else None
    for p in grid:
        pk = gain_map.forward(p) if gain_map is not None else p
        if data is not None:
            Acl = data.Xnext @ V @ lifted_basis(pk, data.n_x)
        else:
            if callable(model) and not isinstance(model, tuple):
                A, B = model(p)
            else:
                A, B = model[0].evaluate(p), model[1].evaluate(p)
            Acl = np.asarray(A) + np.asarray(B) @ K(pk)
        radii.append(float(np.max(np.abs(np.linalg.eigvals(Acl)))))
    return ClosedLoopCertificate(grid, np.array(radii), degenerate)
