"""Block structure shared by both synthesis programs.

Everything here works on plain arrays as well as on affine expressions, so
the same code builds the program and evaluates the identities in tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from ..sdp import bmat, kron_eye
from ..sdp.expr import _ExprOps


@dataclass(frozen=True)
class Dims:
    n_x: int
    n_u: int
    n_p: int
    N_d: int

    @property
    def n_lift(self) -> int:
        """Width of ``[x; p⊗x]``."""
        return self.n_x * (1 + self.n_p)

    @property
    def n_xi(self) -> int:
        """Size of each multiplier block."""
        return 2 * self.n_x * self.n_p

    def n_perf(self, kind: str) -> int:
        """Size of the performance channel appended to the outer factor."""
        return self.n_x + self.n_u if kind == "qp" else 2 * self.n_x + self.n_u

    @classmethod
    def of(cls, m) -> "Dims":
        return cls(m.n_x, m.n_u, m.n_p, m.N_d)


def _unit(n, i) -> np.ndarray:
    e = np.zeros((n, 1))
    e[i] = 1.0
    return e


def row_block(d: Dims, i: int) -> np.ndarray:
    """Selects row block ``i`` (height ``N_d``) of an ``N_d(1+n_p)``-row matrix."""
    return np.kron(_unit(1 + d.n_p, i).T, np.eye(d.N_d))


def col_block(d: Dims, j: int) -> np.ndarray:
    """Selects column block ``j`` (width ``n_x``) of an ``n_x(1+n_p)``-column matrix."""
    return np.kron(_unit(1 + d.n_p, j), np.eye(d.n_x))


def _hcat(blocks):
    if any(isinstance(b, _ExprOps) for b in blocks):
        return bmat([list(blocks)])
    return np.hstack(blocks)


def fq_to_F(FQ, d: Dims):
    """Collapse the quadratic parametrization into coefficient form.

    ``F_Q`` is partitioned into ``(1+n_p) x (1+n_p)`` blocks ``F_ij`` of size
    ``N_d x n_x``. The result ``[F_00 | F_0j + F_j0 ... | F_ij (p⊗p order)]``
    satisfies ``result @ [I; p⊗I; p⊗p⊗I] == [I; p⊗I]ᵀ F_Q [I; p⊗I]``.
    """
    want = (d.N_d * (1 + d.n_p), d.n_x * (1 + d.n_p))
    if tuple(FQ.shape) != want:
        raise DimensionError(f"F_Q must have shape {want}, got {tuple(FQ.shape)}")
    blk = [[row_block(d, i) @ FQ @ col_block(d, j) for j in range(1 + d.n_p)]
           for i in range(1 + d.n_p)]
    parts = [blk[0][0]]
    parts += [blk[0][j] + blk[j][0] for j in range(1, 1 + d.n_p)]
    parts += [blk[i][j] for i in range(1, 1 + d.n_p) for j in range(1, 1 + d.n_p)]
    return _hcat(parts)


def quadratic_form(FQ, p, d: Dims) -> np.ndarray:
    """``[I; p⊗I]ᵀ F_Q [I; p⊗I]`` for a numeric ``F_Q``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    left = np.vstack([np.eye(d.N_d), np.kron(p[:, None], np.eye(d.N_d))])
    right = np.vstack([np.eye(d.n_x), np.kron(p[:, None], np.eye(d.n_x))])
    return left.T @ np.asarray(FQ) @ right


def split_Y(Y, d: Dims):
    """``Y = [Y0 Ybar]`` with ``Y0`` of width ``n_x``."""
    Y0 = Y @ col_block(d, 0)
    Ybar = Y @ np.vstack([np.zeros((d.n_x, d.n_x * d.n_p)), np.eye(d.n_x * d.n_p)])
    return Y0, Ybar


def blocked_lhs(Z, Y, d: Dims):
    """Left side of the data equality: the closed-loop consistency pattern in (Z, Y).

    Rows ``[x; p⊗x; u; p⊗u]``, columns ``[1; p; p⊗p]`` blocks::

        [[Z,  0,       0      ],
         [0,  I⊗Z,     0      ],
         [Y0, Ybar,    0      ],
         [0,  I⊗Y0,    I⊗Ybar ]]
    """
    Y0, Ybar = split_Y(Y, d)
    nx, nu, npp = d.n_x, d.n_u, d.n_p
    if isinstance(Z, _ExprOps) or isinstance(Y, _ExprOps):
        IZ, IY0, IYb = kron_eye(npp, Z), kron_eye(npp, Y0), kron_eye(npp, Ybar)
        z = np.zeros
        return bmat([
            [Z, z((nx, nx * npp)), z((nx, nx * npp * npp))],
            [z((nx * npp, nx)), IZ, z((nx * npp, nx * npp * npp))],
            [Y0, Ybar, z((nu, nx * npp * npp))],
            [z((nu * npp, nx)), IY0, IYb],
        ])
    Ip = np.eye(npp)
    z = np.zeros
    return np.block([
        [Z, z((nx, nx * npp)), z((nx, nx * npp * npp))],
        [z((nx * npp, nx)), np.kron(Ip, Z), z((nx * npp, nx * npp * npp))],
        [Y0, Ybar, z((nu, nx * npp * npp))],
        [z((nu * npp, nx)), np.kron(Ip, Y0), np.kron(Ip, Ybar)],
    ])


def lifted_next_state(Xnext: np.ndarray, d: Dims) -> np.ndarray:
    """``blkdiag(Xnext, I_{n_p} ⊗ Xnext)``."""
    return np.kron(np.eye(1 + d.n_p), Xnext)


def embed_state(d: Dims) -> np.ndarray:
    """``[I_{n_x}; 0]`` of height ``n_x(1+n_p)``."""
    return col_block(d, 0)


def outer_factors(d: Dims, kind: str):
    """The two outer factors of the lifted LMI.

    Returns ``(R1, R2)`` with ``R1 = [[L11, L12], [I, 0]]`` (multiplier side)
    and ``R2 = [L21, L22]`` (the ``W`` side). Columns are ordered as
    ``[xi (2 n_x n_p) | state pair (2 n_x) | performance channel]``.
    """
    nx, npp = d.n_x, d.n_p
    nxi = d.n_xi
    nz = d.n_perf(kind)
    ncols = nxi + 2 * nx + nz
    L11 = np.zeros((nxi, nxi))
    L12 = np.hstack([np.kron(np.ones((npp, 1)), np.eye(2 * nx)), np.zeros((nxi, nz))])
    R1 = np.block([[L11, L12], [np.eye(nxi), np.zeros((nxi, 2 * nx + nz))]])

    g1 = np.hstack([np.eye(nx), np.zeros((nx, nx))])
    g2 = np.hstack([np.zeros((nx, nx)), np.eye(nx)])
    Ip = np.eye(npp)
    nW = 2 * d.n_lift + nz
    L21 = np.vstack([
        np.zeros((nx, nxi)),
        np.kron(Ip, g1),
        np.zeros((nx, nxi)),
        np.kron(Ip, g2),
        np.zeros((nz, nxi)),
    ])
    L22 = np.zeros((nW, 2 * nx + nz))
    L22[0:nx, 0:2 * nx] = g1
    L22[d.n_lift:d.n_lift + nx, 0:2 * nx] = g2
    L22[2 * d.n_lift:, 2 * nx:] = np.eye(nz)
    R2 = np.hstack([L21, L22])
    assert R1.shape == (2 * nxi, ncols) and R2.shape == (nW, ncols)
    return R1, R2


def uncertainty_block(p, n_x: int) -> np.ndarray:
    """``diag(p) ⊗ I_{2 n_x}``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return np.kron(np.diag(p), np.eye(2 * n_x))


def multiplier_outer(p, n_x: int) -> np.ndarray:
    """``[I; Δ(p)]`` for the multiplier condition at scheduling value ``p``."""
    D = uncertainty_block(p, n_x)
    return np.vstack([np.eye(D.shape[0]), D])
