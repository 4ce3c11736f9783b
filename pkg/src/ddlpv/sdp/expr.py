"""Affine matrix expressions over matrix-valued decision variables.

An expression is a constant plus a sum of terms ``L @ V @ R`` or
``L @ V.T @ R`` with constant ``L`` and ``R``. That family is closed under
addition, scaling, constant left/right products, transposition and block
assembly, which is all the synthesis code needs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from numbers import Real

import numpy as np

from ..errors import DimensionError

_ids = itertools.count()


class _ExprOps:
    """Arithmetic shared by variables and expressions."""

    __array_ufunc__ = None  # make ``ndarray @ expr`` defer to __rmatmul__

    def as_expr(self) -> "AffineMatrixExpr":
        raise NotImplementedError

    def __add__(self, other):
        return self.as_expr()._add(as_expr(other, self.shape))

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        return self.as_expr()._add(-as_expr(other, self.shape))

    def __rsub__(self, other):
        return as_expr(other, self.shape)._add(-self.as_expr())

    def __neg__(self):
        return self.as_expr()._scale(-1.0)

    def __mul__(self, a):
        if not isinstance(a, Real):
            return NotImplemented
        return self.as_expr()._scale(float(a))

    __rmul__ = __mul__

    def __matmul__(self, M):
        return self.as_expr()._right(_const(M))

    def __rmatmul__(self, M):
        return self.as_expr()._left(_const(M))

    @property
    def T(self):
        return self.as_expr()._transpose()


class MatrixVariable(_ExprOps):
    """A decision variable of fixed shape, optionally symmetric.

    Symmetric variables are parametrized by their upper triangle
    (column-major), so an ``n x n`` symmetric variable has ``n(n+1)/2``
    scalar degrees of freedom.
    """

    def __init__(self, shape, symmetric: bool = False, name: str | None = None, id: int | None = None):
        rows, cols = (int(s) for s in shape)
        if rows < 1 or cols < 1:
            raise DimensionError(f"variable shape must be positive, got {shape}")
        if symmetric and rows != cols:
            raise DimensionError("a symmetric variable must be square")
        self.id = next(_ids) if id is None else int(id)
        self.shape = (rows, cols)
        self.symmetric = bool(symmetric)
        self.name = name or f"v{self.id}"

    def __repr__(self):
        kind = "sym" if self.symmetric else "free"
        return f"MatrixVariable({self.name}, {self.shape}, {kind})"

    def __hash__(self):
        return hash(self.id)

    def __eq__(self, other):
        return isinstance(other, MatrixVariable) and other.id == self.id

    @property
    def size(self) -> int:
        """Number of scalar degrees of freedom."""
        r, c = self.shape
        return r * (r + 1) // 2 if self.symmetric else r * c

    def expansion(self) -> np.ndarray:
        """``D`` with ``vec(V) == D @ dof`` (column-major ``vec``)."""
        r, c = self.shape
        if not self.symmetric:
            return np.eye(r * c)
        D = np.zeros((r * c, self.size))
        k = 0
        for j in range(c):
            for i in range(j + 1):
                D[j * r + i, k] = 1.0
                D[i * r + j, k] = 1.0
                k += 1
        return D

    def from_dof(self, x) -> np.ndarray:
        r, c = self.shape
        return (self.expansion() @ np.asarray(x, dtype=float)).reshape((r, c), order="F")

    def to_dof(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        if M.shape != self.shape:
            raise DimensionError(f"{self.name}: expected shape {self.shape}, got {M.shape}")
        if not self.symmetric:
            return M.ravel(order="F")
        Ms = 0.5 * (M + M.T)
        return np.array([Ms[i, j] for j in range(self.shape[1]) for i in range(j + 1)])

    def as_expr(self):
        r, c = self.shape
        return AffineMatrixExpr(np.zeros(self.shape), [Term(np.eye(r), self, np.eye(c), False)])


@dataclass(frozen=True)
class Term:
    """``L @ var @ R`` (or ``L @ var.T @ R`` when ``transposed``)."""

    L: np.ndarray
    var: MatrixVariable
    R: np.ndarray
    transposed: bool = False

    @property
    def inner(self):
        r, c = self.var.shape
        return (c, r) if self.transposed else (r, c)

    def value(self, V: np.ndarray) -> np.ndarray:
        return self.L @ (V.T if self.transposed else V) @ self.R


class AffineMatrixExpr(_ExprOps):
    """Constant plus a list of :class:`Term` objects."""

    def __init__(self, constant, terms=()):
        self.constant = np.atleast_2d(np.asarray(constant, dtype=float))
        self.terms = list(terms)
        m, k = self.constant.shape
        for t in self.terms:
            ir, ic = t.inner
            if t.L.shape != (m, ir) or t.R.shape != (ic, k):
                raise DimensionError(
                    f"term {t.var.name}: L{t.L.shape} V{t.inner} R{t.R.shape} "
                    f"does not produce shape {(m, k)}"
                )

    @property
    def shape(self):
        return self.constant.shape

    def as_expr(self):
        return self

    def variables(self) -> list:
        seen = {}
        for t in self.terms:
            seen.setdefault(t.var.id, t.var)
        return list(seen.values())

    def _add(self, other: "AffineMatrixExpr"):
        if other.shape != self.shape:
            raise DimensionError(f"cannot add shapes {self.shape} and {other.shape}")
        return AffineMatrixExpr(self.constant + other.constant, self.terms + other.terms)

    def _scale(self, a: float):
        return AffineMatrixExpr(a * self.constant,
                                [Term(a * t.L, t.var, t.R, t.transposed) for t in self.terms])

    def _right(self, M: np.ndarray):
        if M.shape[0] != self.shape[1]:
            raise DimensionError(f"cannot multiply {self.shape} by {M.shape}")
        return AffineMatrixExpr(self.constant @ M,
                                [Term(t.L, t.var, t.R @ M, t.transposed) for t in self.terms])

    def _left(self, M: np.ndarray):
        if M.shape[1] != self.shape[0]:
            raise DimensionError(f"cannot multiply {M.shape} by {self.shape}")
        return AffineMatrixExpr(M @ self.constant,
                                [Term(M @ t.L, t.var, t.R, t.transposed) for t in self.terms])

    def _transpose(self):
        return AffineMatrixExpr(self.constant.T,
                                [Term(t.R.T, t.var, t.L.T, not t.transposed) for t in self.terms])

    def evaluate(self, values) -> np.ndarray:
        """Value at an assignment ``{variable or id or name: matrix}``."""
        out = np.array(self.constant, copy=True)
        for t in self.terms:
            out += t.value(_lookup(values, t.var))
        return out

    def magnitude(self, values) -> float:
        """Sum of the norms of the constant and every term at ``values``.

        Used as the scale for relative residuals.
        """
        s = np.linalg.norm(self.constant)
        for t in self.terms:
            s += np.linalg.norm(t.value(_lookup(values, t.var)))
        return float(s)

    def compile(self, offsets: dict, n: int):
        """Return ``(c, A)`` with ``vec(expr) == c + A @ x`` (column-major).

        Args:
            offsets: variable id -> first index of its dofs in ``x``.
            n: total number of scalar dofs.
        """
        m, k = self.shape
        c = self.constant.ravel(order="F").copy()
        A = np.zeros((m * k, n))
        for t in self.terms:
            if t.var.id not in offsets:
                raise KeyError(f"variable {t.var.name} is not registered in the program")
            D = t.var.expansion()
            if t.transposed:
                D = _commutation(*t.var.shape) @ D
            o = offsets[t.var.id]
            A[:, o:o + t.var.size] += np.kron(t.R.T, t.L) @ D
        return c, A


def _commutation(r: int, c: int) -> np.ndarray:
    """``K`` with ``K @ vec(V) == vec(V.T)`` for ``V`` of shape (r, c)."""
    K = np.zeros((r * c, r * c))
    for i in range(r):
        for j in range(c):
            K[i * c + j, j * r + i] = 1.0
    return K


def _lookup(values, var: MatrixVariable) -> np.ndarray:
    for key in (var, var.id, var.name):
        try:
            return np.asarray(values[key], dtype=float)
        except (KeyError, TypeError):
            continue
    raise KeyError(f"no value for variable {var.name}")


def _const(M) -> np.ndarray:
    if isinstance(M, _ExprOps):
        raise TypeError("products of two decision-dependent expressions are not affine")
    return np.atleast_2d(np.asarray(M, dtype=float))


def as_expr(x, shape=None) -> AffineMatrixExpr:
    """Coerce a variable, expression, array or scalar to an expression.

    Scalars are only accepted for ``1 x 1`` shapes, or as zero.
    """
    if isinstance(x, _ExprOps):
        return x.as_expr()
    if isinstance(x, Real) and shape is not None:
        if x == 0:
            return AffineMatrixExpr(np.zeros(shape))
        if tuple(shape) != (1, 1):
            raise DimensionError("only 1x1 expressions combine with nonzero scalars")
    return AffineMatrixExpr(np.atleast_2d(np.asarray(x, dtype=float)))


def bmat(blocks) -> AffineMatrixExpr:
    """Assemble a block matrix; ``None`` or ``0`` entries become zero blocks.

    Every block row needs at least one sized entry to fix its height, and
    likewise for block columns.
    """
    nr, nc = len(blocks), len(blocks[0])
    if any(len(row) != nc for row in blocks):
        raise DimensionError("block rows have different lengths")
    heights, widths = [None] * nr, [None] * nc
    for i, row in enumerate(blocks):
        for j, b in enumerate(row):
            if b is None or (isinstance(b, Real) and b == 0):
                continue
            h, w = b.shape if hasattr(b, "shape") and len(b.shape) == 2 else np.atleast_2d(b).shape
            if heights[i] not in (None, h) or widths[j] not in (None, w):
                raise DimensionError(f"block ({i}, {j}) has inconsistent shape {(h, w)}")
            heights[i], widths[j] = h, w
    if None in heights or None in widths:
        raise DimensionError("every block row and column needs one sized entry")
    H, W = sum(heights), sum(widths)
    ro = np.concatenate([[0], np.cumsum(heights)])
    co = np.concatenate([[0], np.cumsum(widths)])
    const = np.zeros((H, W))
    terms = []
    for i, row in enumerate(blocks):
        for j, b in enumerate(row):
            if b is None or (isinstance(b, Real) and b == 0):
                continue
            e = as_expr(b)
            const[ro[i]:ro[i + 1], co[j]:co[j + 1]] += e.constant
            if e.terms:
                P = np.zeros((H, heights[i]))
                P[ro[i]:ro[i + 1], :] = np.eye(heights[i])
                Q = np.zeros((widths[j], W))
                Q[:, co[j]:co[j + 1]] = np.eye(widths[j])
                terms += [Term(P @ t.L, t.var, t.R @ Q, t.transposed) for t in e.terms]
    return AffineMatrixExpr(const, terms)


def kron_eye(n: int, x) -> AffineMatrixExpr:
    """``I_n ⊗ x`` for an expression ``x``."""
    e = as_expr(x)
    m, k = e.shape
    if n == 0:
        return AffineMatrixExpr(np.zeros((0, 0)))
    terms = []
    for i in range(n):
        ei = np.zeros((n, 1))
        ei[i] = 1.0
        Pl = np.kron(ei, np.eye(m))
        Pr = np.kron(ei.T, np.eye(k))
        terms += [Term(Pl @ t.L, t.var, t.R @ Pr, t.transposed) for t in e.terms]
    return AffineMatrixExpr(np.kron(np.eye(n), e.constant), terms)


def trace(x) -> AffineMatrixExpr:
    """Trace as a ``1 x 1`` expression."""
    e = as_expr(x)
    m, k = e.shape
    if m != k:
        raise DimensionError("trace of a non-square expression")
    terms = []
    for i in range(m):
        ei = np.zeros((m, 1))
        ei[i] = 1.0
        terms += [Term(ei.T @ t.L, t.var, t.R @ ei, t.transposed) for t in e.terms]
    return AffineMatrixExpr(np.array([[np.trace(e.constant)]]), terms)
