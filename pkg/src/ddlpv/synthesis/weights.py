"""Performance weights and their validation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError

PSD_TOL = 1e-12


def _square(M, name) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.allclose(M, M.T, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise ValueError(f"{name} must be symmetric")
    M = 0.5 * (M + M.T)
    M.setflags(write=False)
    return M


def matrix_from_config(v) -> np.ndarray:
    """Accept a scalar, a diagonal (flat list) or a full matrix (nested list)."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return np.diag(arr)
    return arr


def psd_sqrt(M) -> np.ndarray:
    """Symmetric square root of a PSD matrix (tiny negative eigenvalues clipped)."""
    w, V = np.linalg.eigh(M)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


@dataclass(frozen=True)
class QuadraticWeights:
    """State weight ``Q ⪰ 0`` and input weight ``R ≻ 0`` of the quadratic cost."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = _square(self.Q, "Q")
        R = _square(self.R, "R")
        if np.linalg.eigvalsh(Q)[0] < -PSD_TOL * max(1.0, np.abs(Q).max()):
            raise ValueError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(R)[0] <= 0:
            raise ValueError("R must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @property
    def n_x(self):
        return self.Q.shape[0]

    @property
    def n_u(self):
        return self.R.shape[0]

    def to_dict(self):
        return {"Q": self.Q.tolist(), "R": self.R.tolist()}

    @classmethod
    def from_config(cls, d: dict) -> "QuadraticWeights":
        return cls(matrix_from_config(d["Q"]), matrix_from_config(d["R"]))


@dataclass(frozen=True)
class L2Weights:
    """Performance-output shaping ``W_S ⪰ 0``, ``W_R ≻ 0`` and the trace
    regularization weight ``lam ≥ 0``."""

    W_S: np.ndarray
    W_R: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        Ws = _square(self.W_S, "W_S")
        Wr = _square(self.W_R, "W_R")
        if np.linalg.eigvalsh(Ws)[0] < -PSD_TOL * max(1.0, np.abs(Ws).max()):
            raise ValueError("W_S must be positive semidefinite")
        if np.linalg.eigvalsh(Wr)[0] <= 0:
            raise ValueError("W_R must be positive definite")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lam must be a nonnegative number")
        object.__setattr__(self, "W_S", Ws)
        object.__setattr__(self, "W_R", Wr)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n_x(self):
        return self.W_S.shape[0]

    @property
    def n_u(self):
        return self.W_R.shape[0]

    def to_dict(self):
        return {"W_S": self.W_S.tolist(), "W_R": self.W_R.tolist(), "lam": self.lam}

    @classmethod
    def from_config(cls, d: dict) -> "L2Weights":
        return cls(matrix_from_config(d["W_S"]), matrix_from_config(d["W_R"]), float(d.get("lam", 0.0)))


#: Weights used for the unbalanced-disc experiments.
DISC_QP_WEIGHTS = QuadraticWeights(np.diag([4.0, 0.1]), np.array([[3.5]]))
DISC_L2_WEIGHTS = L2Weights(np.diag([1.5e-2, 2e-5]), np.array([[3.06e-3]]), 1e-6)
