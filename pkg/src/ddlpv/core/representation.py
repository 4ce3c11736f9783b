"""Data matrices, the PE rank test and the data-driven open/closed-loop maps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConsistencyError, DimensionError, IllPosedError
from .types import (AffineMatrixFunction, ControllerGains, DataDictionary, DataMatrices,
                    PeReport, as_gains, check_vector, sched_kron)

#: Relative singular-value threshold shared by the rank test and every
#: pseudoinverse, so "PE" and "solvable" always agree.
DEFAULT_RANK_TOL = 1e-9

#: Windows whose data matrix is worse conditioned than this are flagged.
COND_FLAG = 1e6


def _kron_columns(P: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Column-wise ``p_k ⊗ v_k`` for sample-major P (N, n_p) and V (N, n_v)."""
    N, n_p = P.shape
    n_v = V.shape[1]
    return (P[:, :, None] * V[:, None, :]).reshape(N, n_p * n_v).T


def build_data_matrices(d: DataDictionary) -> DataMatrices:
    """Assemble ``U, Up, X, Xp, Xnext`` (and the stack ``G``) from a dictionary.

    Samples ``1..N_d`` feed the regressors and ``2..N_d+1`` the shifted states.
    """
    if not isinstance(d, DataDictionary):
        raise DimensionError("build_data_matrices expects a DataDictionary")
    N = d.N_d
    u, p, x = d.u[:N], d.p[:N], d.x[:N]
    return DataMatrices(
        U=u.T,
        Up=_kron_columns(p, u),
        X=x.T,
        Xp=_kron_columns(p, x),
        Xnext=d.x[1:].T,
        n_u=d.n_u,
        n_p=d.n_p,
        n_x=d.n_x,
    )


def pe_check(m: DataMatrices, rank_tol: float = DEFAULT_RANK_TOL) -> PeReport:
    """Rank and conditioning of the stacked data matrix ``G``.

    The rank counts singular values above ``rank_tol * sigma_max``. The
    condition number is ``sigma_max / sigma_required`` and is infinite when the
    ``required``-th singular value is missing or below the rank threshold.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    required = m.required_rank
    s = np.linalg.svd(m.G, compute_uv=False) if m.G.size else np.zeros(0)
    smax = s[0] if s.size else 0.0
    thresh = rank_tol * smax
    rank = int(np.sum(s > thresh)) if smax > 0 else 0
    if s.size >= required and smax > 0 and s[required - 1] > thresh:
        cond = float(smax / s[required - 1])
    else:
        cond = float("inf")
    return PeReport(rank=rank, required=required, is_pe=rank == required,
                    singular_values=s, condition_number=cond)


def _require_pe(m: DataMatrices, rank_tol: float) -> PeReport:
    rep = pe_check(m, rank_tol)
    if not rep.is_pe:
        raise IllPosedError(
            f"data dictionary is not persistently exciting: rank {rep.rank} < {rep.required}"
        )
    return rep


def regressor(x, p, u, n_x: int, n_p: int, n_u: int) -> np.ndarray:
    """The column ``[x; p⊗x; u; p⊗u]`` matching the row order of ``G``."""
    x = check_vector(x, n_x, "x")
    p = check_vector(p, n_p, "p")
    u = check_vector(u, n_u, "u")
    return np.concatenate([x, sched_kron(p, x), u, sched_kron(p, u)])


def row_space_projector(m: DataMatrices, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthogonal projector ``G⁺G`` onto the row space of ``G`` (N_d x N_d)."""
    return np.linalg.pinv(m.G, rcond=rank_tol) @ m.G


def projected_xnext(m: DataMatrices, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """``Xnext G⁺ G``: the shifted states seen through the minimum-norm solution.

    For data generated exactly by an affine LPV model this equals ``Xnext``.
    """
    return m.Xnext @ row_space_projector(m, rank_tol)


def dd_open_loop_step(m: DataMatrices, x, p, u, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Next state predicted purely from data: ``Xnext G⁺ [x; p⊗x; u; p⊗u]``."""
    _require_pe(m, rank_tol)
    z = regressor(x, p, u, m.n_x, m.n_p, m.n_u)
    g, *_ = np.linalg.lstsq(m.G, z, rcond=rank_tol)
    return m.Xnext @ g


def lpv_step(A: AffineMatrixFunction, B: AffineMatrixFunction, x, p, u) -> np.ndarray:
    """Model-based step ``A(p) x + B(p) u``."""
    if A.n_p != B.n_p:
        raise DimensionError("A and B depend on different numbers of scheduling channels")
    n_x = A.shape[0]
    if A.shape != (n_x, n_x) or B.shape[0] != n_x:
        raise DimensionError(f"incompatible A {A.shape} / B {B.shape}")
    x = check_vector(x, n_x, "x")
    u = check_vector(u, B.shape[1], "u")
    return A.evaluate(p) @ x + B.evaluate(p) @ u


def lifted_state(x, p) -> np.ndarray:
    """``[x; p⊗x; p⊗p⊗x]``, the argument of the closed-loop matrices."""
    x = np.asarray(x, dtype=float).ravel()
    p = np.atleast_1d(np.asarray(p, dtype=float)).ravel()
    px = sched_kron(p, x)
    return np.concatenate([x, px, sched_kron(p, px)])


def lifted_basis(p, n: int) -> np.ndarray:
    """``[I; p⊗I; p⊗p⊗I]`` with identity blocks of size ``n``."""
    p = np.atleast_1d(np.asarray(p, dtype=float)).ravel()
    In = np.eye(n)
    return np.vstack([In, np.kron(p[:, None], In), np.kron(np.kron(p, p)[:, None], In)])


def closed_loop_matrix(A: AffineMatrixFunction, B: AffineMatrixFunction,
                       K: ControllerGains) -> np.ndarray:
    """Model-based closed-loop matrix acting on ``[x; p⊗x; p⊗p⊗x]``.

    Returns ``[A0 + B0 K0 | Abar + B0 Kbar + Bbar (I⊗K0) | Bbar (I⊗Kbar)]``.
    """
    K = as_gains(K)
    n_p = A.n_p
    if B.n_p != n_p or K.n_p != n_p:
        raise DimensionError("A, B and K must share the scheduling dimension")
    n_x = A.shape[0]
    if A.shape != (n_x, n_x) or B.shape[0] != n_x or K.K0.shape != (B.shape[1], n_x):
        raise DimensionError(f"incompatible shapes A {A.shape}, B {B.shape}, K0 {K.K0.shape}")
    A0, B0 = A.coeffs[0], B.coeffs[0]
    Ip = np.eye(n_p)
    first = A0 + B0 @ K.K0
    second = A.bar + B0 @ K.Kbar + B.bar @ np.kron(Ip, K.K0)
    third = B.bar @ np.kron(Ip, K.Kbar)
    return np.hstack([first, second, third])


def consistency_matrix(K: ControllerGains, n_x: int, n_p: int) -> np.ndarray:
    """Right-hand side of the consistency condition ``G V = M_CL``."""
    K = as_gains(K)
    n_u = K.n_u
    Ip = np.eye(n_p)
    cols = (n_x, n_x * n_p, n_x * n_p * n_p)
    rows = (n_x, n_x * n_p, n_u, n_u * n_p)
    M = np.zeros((sum(rows), sum(cols)))
    r = np.cumsum((0,) + rows)
    c = np.cumsum((0,) + cols)
    M[r[0]:r[1], c[0]:c[1]] = np.eye(n_x)
    M[r[1]:r[2], c[1]:c[2]] = np.eye(n_x * n_p)
    M[r[2]:r[3], c[0]:c[1]] = K.K0
    M[r[2]:r[3], c[1]:c[2]] = K.Kbar
    M[r[3]:r[4], c[1]:c[2]] = np.kron(Ip, K.K0)
    M[r[3]:r[4], c[2]:c[3]] = np.kron(Ip, K.Kbar)
    return M


@dataclass(frozen=True)
class ClosedLoopMap:
    """Minimum-norm solution of the consistency condition and its residual."""

    V: np.ndarray
    residual: float
    M_CL: np.ndarray


def dd_closed_loop_map(m: DataMatrices, K: ControllerGains,
                       rank_tol: float = DEFAULT_RANK_TOL,
                       rel_tol: float = 1e-6) -> ClosedLoopMap:
    """Solve ``G V = M_CL`` column-wise in the least-squares/minimum-norm sense.

    ``Xnext @ result.V`` is the data-driven closed-loop matrix acting on
    ``[x; p⊗x; p⊗p⊗x]``.

    Raises:
        IllPosedError: the dictionary fails the PE test.
        ConsistencyError: the residual exceeds ``rel_tol * ||M_CL||_F``.
    """
    K = as_gains(K)
    if K.n_x != m.n_x or K.n_u != m.n_u or K.n_p != m.n_p:
        raise DimensionError("controller dimensions do not match the data")
    _require_pe(m, rank_tol)
    M_CL = consistency_matrix(K, m.n_x, m.n_p)
    V, *_ = np.linalg.lstsq(m.G, M_CL, rcond=rank_tol)
    res = float(np.linalg.norm(m.G @ V - M_CL))
    if res > rel_tol * max(np.linalg.norm(M_CL), 1.0):
        raise ConsistencyError(f"consistency residual {res:.3e} too large")
    return ClosedLoopMap(V=V, residual=res, M_CL=M_CL)


def dd_closed_loop_at(m: DataMatrices, K: ControllerGains, p,
                      rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Frozen-scheduling data-driven closed-loop state matrix ``Xnext V [I; p⊗I; p⊗p⊗I]``."""
    V = dd_closed_loop_map(m, K, rank_tol).V
    return m.Xnext @ V @ lifted_basis(p, m.n_x)


@dataclass(frozen=True)
class WindowInfo:
    offset: int
    rank: int
    required: int
    condition_number: float
    flagged: bool


def window_sweep(d: DataDictionary, N_d: int, rank_tol: float = DEFAULT_RANK_TOL,
                 cond_flag: float = COND_FLAG) -> list:
    """Rank and conditioning of every length-``N_d`` window of a long record.

    ``d`` is a record holding all available samples; window ``o`` uses samples
    ``o .. o + N_d`` (``N_d + 1`` of them).
    """
    if N_d < 1 or N_d > d.N_d:
        raise DimensionError(f"window length {N_d} does not fit a record of N_d={d.N_d}")
    out = []
    for o in range(d.N_d - N_d + 1):
        rep = pe_check(build_data_matrices(window(d, o, N_d)), rank_tol)
        out.append(WindowInfo(o, rep.rank, rep.required, rep.condition_number,
                              bool(rep.condition_number > cond_flag)))
    return out


def best_window(d: DataDictionary, N_d: int, rank_tol: float = DEFAULT_RANK_TOL) -> Optional[int]:
    """Offset of the best-conditioned PE window, or ``None`` if none is PE."""
    sweep = [w for w in window_sweep(d, N_d, rank_tol) if w.rank == w.required]
    if not sweep:
        return None
    return min(sweep, key=lambda w: (w.condition_number, w.offset)).offset


def window(d: DataDictionary, offset: int, N_d: int) -> DataDictionary:
    """Sub-dictionary with samples ``offset .. offset + N_d``."""
    if offset < 0 or offset + N_d > d.N_d:
        raise DimensionError(f"window (offset={offset}, N_d={N_d}) exceeds record of N_d={d.N_d}")
    sl = slice(offset, offset + N_d + 1)
    prov = dict(d.provenance, window_offset=int(offset))
    return DataDictionary(d.u[sl], d.p[sl], d.x[sl], d.box, d.Ts, prov)
