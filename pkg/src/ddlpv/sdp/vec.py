"""Scaled half-vectorization of symmetric matrices.

Entries are taken from the upper triangle column by column and off-diagonal
entries are scaled by sqrt(2), so that ``<A, B> == svec(A) @ svec(B)``. This
is the ordering expected by Clarabel's PSD triangle cone.
"""
import numpy as np

SQRT2 = np.sqrt(2.0)


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def triu_indices_colmajor(n: int):
    """Row and column indices of the upper triangle, column-major order."""
    rows, cols = [], []
    for j in range(n):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    return np.array(rows, dtype=int), np.array(cols, dtype=int)


def svec(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"svec needs a square matrix, got shape {M.shape}")
    r, c = triu_indices_colmajor(M.shape[0])
    scale = np.where(r == c, 1.0, SQRT2)
    return M[r, c] * scale


def smat(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    n = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if svec_dim(n) != v.size:
        raise ValueError(f"length {v.size} is not a triangular number")
    r, c = triu_indices_colmajor(n)
    vals = np.where(r == c, v, v / SQRT2)
    M = np.zeros((n, n))
    M[r, c] = vals
    M[c, r] = vals
    return M


def svec_operator(n: int) -> np.ndarray:
    """Matrix ``S`` with ``S @ vec(M) == svec(M)`` for symmetric ``M``.

    ``vec`` is column-major. Off-diagonal pairs are averaged, so ``S`` also
    maps a non-symmetric ``M`` to ``svec((M + M.T) / 2)``.
    """
    r, c = triu_indices_colmajor(n)
    S = np.zeros((svec_dim(n), n * n))
    for k, (i, j) in enumerate(zip(r, c)):
        if i == j:
            S[k, j * n + i] = 1.0
        else:
            S[k, j * n + i] = SQRT2 / 2
            S[k, i * n + j] = SQRT2 / 2
    return S
