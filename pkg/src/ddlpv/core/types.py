"""Value types for the data-driven LPV representation.

Every type here is immutable after construction: arrays are copied on the way
in and flagged read-only.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DimensionError, ScheduleBoxError


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def sched_kron(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Kronecker product ``p ⊗ v`` for vectors, scheduling-major.

    Element ``i * len(v) + j`` is ``p[i] * v[j]``; this is the single ordering
    used for data matrices, closed-loop blocks and gain blocks.
    """
    return np.kron(np.asarray(p, dtype=float).ravel(), np.asarray(v, dtype=float).ravel())


@dataclass(frozen=True)
class ScheduleBox:
    """Axis-aligned box of admissible scheduling values."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).ravel()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).ravel()
        if lo.shape != hi.shape:
            raise DimensionError(f"box bounds differ in length: {lo.shape} vs {hi.shape}")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ScheduleBoxError("box bounds must be finite")
        if np.any(lo > hi):
            raise ScheduleBoxError(f"lower bound exceeds upper bound: {lo} > {hi}")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @property
    def n_p(self) -> int:
        return self.lower.size

    @property
    def is_degenerate(self) -> bool:
        return bool(np.any(self.lower == self.upper))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def vertices(self) -> np.ndarray:
        """All 2**n_p corners, shape (2**n_p, n_p), lower-first ordering."""
        corners = itertools.product(*zip(self.lower, self.upper))
        return np.array(list(corners), dtype=float).reshape(2 ** self.n_p, self.n_p)

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def grid(self, n: int) -> np.ndarray:
        """Uniform tensor grid with ``n`` points per axis, shape (n**n_p, n_p)."""
        axes = [np.linspace(lo, hi, n) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduleBox":
        return cls(d["lower"], d["upper"])

    @classmethod
    def symmetric_unit(cls, n_p: int) -> "ScheduleBox":
        return cls(-np.ones(n_p), np.ones(n_p))


#: The scheduling range of the unbalanced-disc experiment (range of sinc).
DISC_BOX = ScheduleBox([-0.22], [1.0])


@dataclass(frozen=True)
class DataDictionary:
    """Measured sequence ``{u_k, p_k, x_k}`` for ``k = 1 .. N_d + 1``.

    Samples are stored row-wise: ``u`` has shape ``(N_d + 1, n_u)`` and so on.
    The final ``u`` and ``p`` samples are carried along but never enter the
    data matrices; only ``x_{N_d+1}`` is used.
    """

    u: np.ndarray
    p: np.ndarray
    x: np.ndarray
    box: ScheduleBox
    Ts: Optional[float] = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        u = _as_samples(self.u, "u")
        p = _as_samples(self.p, "p")
        x = _as_samples(self.x, "x")
        if not (len(u) == len(p) == len(x)):
            raise DimensionError(
                f"sequence lengths differ: u={len(u)}, p={len(p)}, x={len(x)}"
            )
        if len(x) < 2:
            raise DimensionError("a dictionary needs at least two samples (N_d >= 1)")
        if p.shape[1] != self.box.n_p:
            raise DimensionError(f"p has {p.shape[1]} channels, box has {self.box.n_p}")
        for k, pk in enumerate(p):
            if not self.box.contains(pk, tol=1e-12):
                raise ScheduleBoxError(f"scheduling sample {k} = {pk} lies outside the box")
        for name, arr in (("u", u), ("p", p), ("x", x)):
            if not np.all(np.isfinite(arr)):
                raise DimensionError(f"{name} contains non-finite samples")
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def n_u(self) -> int:
        return self.u.shape[1]

    @property
    def n_p(self) -> int:
        return self.p.shape[1]

    @property
    def n_x(self) -> int:
        return self.x.shape[1]

    @property
    def N_d(self) -> int:
        return self.x.shape[0] - 1

    @property
    def dims(self) -> tuple:
        return (self.n_u, self.n_p, self.n_x, self.N_d)

    def truncate(self, N_d: int) -> "DataDictionary":
        """Keep the first ``N_d + 1`` samples."""
        if not 1 <= N_d <= self.N_d:
            raise DimensionError(f"cannot truncate N_d={self.N_d} to {N_d}")
        return DataDictionary(self.u[: N_d + 1], self.p[: N_d + 1], self.x[: N_d + 1],
                              self.box, self.Ts, self.provenance)


def _as_samples(a, name) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 1-D or 2-D sample array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DataMatrices:
    """Stacked data matrices built from a dictionary (columns are samples)."""

    U: np.ndarray
    Up: np.ndarray
    X: np.ndarray
    Xp: np.ndarray
    Xnext: np.ndarray
    n_u: int
    n_p: int
    n_x: int

    def __post_init__(self):
        for name in ("U", "Up", "X", "Xp", "Xnext"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        G = np.vstack([self.X, self.Xp, self.U, self.Up])
        object.__setattr__(self, "G", _frozen(G))

    @property
    def N_d(self) -> int:
        return self.X.shape[1]

    @property
    def required_rank(self) -> int:
        return (1 + self.n_p) * (self.n_x + self.n_u)


@dataclass(frozen=True)
class AffineMatrixFunction:
    """Matrix function ``M(p) = M_0 + sum_i p[i] M_i``."""

    coeffs: tuple

    def __post_init__(self):
        cs = [np.atleast_2d(np.asarray(c, dtype=float)) for c in self.coeffs]
        if not cs:
            raise DimensionError("an affine matrix function needs at least the constant term")
        shape = cs[0].shape
        if any(c.shape != shape for c in cs):
            raise DimensionError(f"coefficient shapes differ: {[c.shape for c in cs]}")
        object.__setattr__(self, "coeffs", tuple(_frozen(c) for c in cs))

    @property
    def n_p(self) -> int:
        return len(self.coeffs) - 1

    @property
    def shape(self) -> tuple:
        return self.coeffs[0].shape

    def __call__(self, p) -> np.ndarray:
        return self.evaluate(p)

    def evaluate(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float)).ravel()
        if p.size != self.n_p:
            raise DimensionError(f"expected {self.n_p} scheduling values, got {p.size}")
        out = np.array(self.coeffs[0], copy=True)
        for pi, c in zip(p, self.coeffs[1:]):
            out += pi * c
        return out

    def stacked(self) -> np.ndarray:
        """Horizontal stack ``[M_0 M_1 ... M_np]``."""
        return np.hstack(self.coeffs)

    @property
    def bar(self) -> np.ndarray:
        """Horizontal stack of the scheduling coefficients ``[M_1 ... M_np]``."""
        if self.n_p == 0:
            return np.zeros((self.shape[0], 0))
        return np.hstack(self.coeffs[1:])


@dataclass(frozen=True)
class ControllerGains:
    """Affine state-feedback gains ``K(p) = K0 + sum_i p[i] K_i``.

    ``Kbar`` holds ``[K_1 ... K_np]`` side by side so that
    ``K(p) x == K0 x + Kbar (p ⊗ x)``.
    """

    K0: np.ndarray
    Kbar: np.ndarray

    def __post_init__(self):
        K0 = np.atleast_2d(np.asarray(self.K0, dtype=float))
        Kbar = np.asarray(self.Kbar, dtype=float)
        if Kbar.ndim == 1:
            Kbar = Kbar[None, :]
        if Kbar.shape[0] != K0.shape[0] or Kbar.shape[1] % K0.shape[1]:
            raise DimensionError(f"Kbar shape {Kbar.shape} incompatible with K0 shape {K0.shape}")
        object.__setattr__(self, "K0", _frozen(K0))
        object.__setattr__(self, "Kbar", _frozen(Kbar))

    @property
    def n_u(self) -> int:
        return self.K0.shape[0]

    @property
    def n_x(self) -> int:
        return self.K0.shape[1]

    @property
    def n_p(self) -> int:
        return self.Kbar.shape[1] // self.n_x

    def blocks(self) -> list:
        return [self.Kbar[:, i * self.n_x:(i + 1) * self.n_x] for i in range(self.n_p)]

    def as_affine(self) -> AffineMatrixFunction:
        return AffineMatrixFunction((self.K0, *self.blocks()))

    def __call__(self, p) -> np.ndarray:
        return self.as_affine().evaluate(p)

    def control(self, x, p) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        return self.K0 @ x + self.Kbar @ sched_kron(p, x)

    @classmethod
    def zeros(cls, n_u: int, n_x: int, n_p: int) -> "ControllerGains":
        return cls(np.zeros((n_u, n_x)), np.zeros((n_u, n_x * n_p)))

    def to_dict(self) -> dict:
        return {"K0": self.K0.tolist(), "Kbar": self.Kbar.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerGains":
        return cls(np.array(d["K0"], dtype=float), np.array(d["Kbar"], dtype=float))


@dataclass(frozen=True)
class PeReport:
    """Outcome of the persistency-of-excitation rank test."""

    rank: int
    required: int
    is_pe: bool
    singular_values: np.ndarray
    condition_number: float

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "required": self.required,
            "is_pe": self.is_pe,
            "singular_values": self.singular_values.tolist(),
            "condition_number": (None if not np.isfinite(self.condition_number)
                                 else float(self.condition_number)),
        }


def check_vector(v, n: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
    if arr.size != n:
        raise DimensionError(f"{name} must have {n} entries, got {arr.size}")
    return arr


def as_gains(K) -> ControllerGains:
    if isinstance(K, ControllerGains):
        return K
    K0, Kbar = K
    return ControllerGains(K0, Kbar)
