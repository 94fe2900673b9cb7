"""Dense symmetric matrix kernels.

Determinants, minors, adjugates, inverses and norms for small dense
matrices, plus the spectral computation of the inverse norm. Elimination
routines accept stacks of matrices with shape ``(..., n, n)``; every
operation on a stack is elementwise per matrix, so results for one matrix
do not depend on what else is in the batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from smilab.errors import DimensionError, SingularMatrixError

__all__ = [
    "SymMatrix",
    "SINGULAR_RTOL",
    "det",
    "lu_factor",
    "lu_solve",
    "solve",
    "minor",
    "adjugate",
    "sym_eigenvalues",
    "inverse_op_norm",
    "inverse_op_norms",
    "general_inverse_op_norms",
    "hs_norm",
    "inverse",
]

# min |lambda| below SINGULAR_RTOL * max |lambda| counts as singular
SINGULAR_RTOL = 1e3 * np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Real symmetric ``n x n`` matrix with exact (bitwise) symmetry.

    The entries are copied into a read-only float64 array.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"symmetric matrix must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise DimensionError("symmetric matrix must have n >= 1")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not exactly symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


MatrixLike = Union[SymMatrix, np.ndarray, Iterable]


def _as_array(m: MatrixLike) -> np.ndarray:
    if isinstance(m, SymMatrix):
        return m.entries
    return np.asarray(m, dtype=np.float64)


def _as_square(m: MatrixLike) -> np.ndarray:
    a = _as_array(m)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrix, got shape {a.shape}")
    return a


def lu_factor(m: MatrixLike):
    """LU factorisation with partial pivoting.

    Returns ``(lu, perm, sign)`` where ``lu`` holds the unit lower factor
    below the diagonal and the upper factor on and above it, ``perm[..., k]``
    is the row swapped into position ``k`` at step ``k``, and ``sign`` is the
    permutation parity. Exactly zero pivots are left in place (the matrix is
    then exactly singular and ``det`` returns 0).
    """
    a = _as_square(m)
    batch = a.shape[:-2]
    n = a.shape[-1]
    lu = np.array(a, dtype=np.float64).reshape((-1, n, n))
    nb = lu.shape[0]
    b = np.arange(nb)
    perm = np.zeros((nb, n), dtype=np.intp)
    sign = np.ones(nb)
    for k in range(n):
        piv = k + np.argmax(np.abs(lu[:, k:, k]), axis=1)
        perm[:, k] = piv
        swapped = piv != k
        if swapped.any():
            rows = lu[b, piv].copy()
            lu[b, piv] = lu[b, k]
            lu[b, k] = rows
            sign[swapped] = -sign[swapped]
        if k == n - 1:
            break
        pivot = lu[:, k, k]
        nz = pivot != 0.0
        factors = np.zeros((nb, n - k - 1))
        np.divide(lu[:, k + 1:, k], pivot[:, None], out=factors, where=nz[:, None])
        lu[:, k + 1:, k + 1:] -= factors[:, :, None] * lu[:, k, None, k + 1:]
        lu[:, k + 1:, k] = factors
    return lu.reshape(batch + (n, n)), perm.reshape(batch + (n,)), sign.reshape(batch)


def det(m: MatrixLike):
    """Determinant by pivoted elimination.

    The 0x0 determinant is 1. A stack of matrices gives an array of
    determinants.
    """
    a = _as_square(m)
    if a.shape[-1] == 0:
        out = np.ones(a.shape[:-2])
        return float(out) if out.ndim == 0 else out
    lu, _, sign = lu_factor(a)
    out = sign * np.prod(np.diagonal(lu, axis1=-2, axis2=-1), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def lu_solve(lu: np.ndarray, perm: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve with factors from :func:`lu_factor`; ``rhs`` has shape (..., n, k)."""
    n = lu.shape[-1]
    batch = lu.shape[:-2]
    lu = lu.reshape((-1, n, n))
    perm = perm.reshape((-1, n))
    x = np.array(np.broadcast_to(rhs, batch + rhs.shape[-2:]), dtype=np.float64)
    x = x.reshape((-1,) + rhs.shape[-2:])
    b = np.arange(lu.shape[0])
    for k in range(n):
        piv = perm[:, k]
        rows = x[b, piv].copy()
        x[b, piv] = x[b, k]
        x[b, k] = rows
    for k in range(n - 1):
        x[:, k + 1:] -= lu[:, k + 1:, k, None] * x[:, k, None, :]
    for k in range(n - 1, -1, -1):
        x[:, k] /= lu[:, k, k, None]
        if k:
            x[:, :k] -= lu[:, :k, k, None] * x[:, k, None, :]
    return x.reshape(batch + rhs.shape[-2:])


def solve(m: MatrixLike, rhs) -> np.ndarray:
    """Solve ``m x = rhs`` by pivoted elimination (no singularity check)."""
    a = _as_square(m)
    rhs = np.asarray(rhs, dtype=np.float64)
    vector = rhs.ndim == 1 or rhs.shape == a.shape[:-1]
    if vector:
        rhs = rhs[..., None]
    if rhs.shape[-2] != a.shape[-1]:
        raise DimensionError(f"rhs has {rhs.shape[-2]} rows, matrix has {a.shape[-1]}")
    lu, perm, _ = lu_factor(a)
    x = lu_solve(lu, perm, rhs)
    return x[..., 0] if vector else x


def _index_set(removed, size, what):
    idx = sorted({int(i) for i in removed})
    for i in idx:
        if not 0 <= i < size:
            raise IndexError(f"{what} index {i} out of range for size {size}")
    return [k for k in range(size) if k not in idx]


def minor(m: MatrixLike, removed_rows, removed_cols) -> np.ndarray:
    """Submatrix with the listed rows and columns deleted (0-based indices).

    Remaining rows and columns keep their relative order. Works on stacks,
    deleting along the last two axes.
    """
    a = _as_array(m)
    if a.ndim < 2:
        raise DimensionError(f"expected a matrix, got shape {a.shape}")
    keep_r = _index_set(removed_rows, a.shape[-2], "row")
    keep_c = _index_set(removed_cols, a.shape[-1], "column")
    return a[..., keep_r, :][..., :, keep_c]


def _cofactor_stack(a: np.ndarray) -> np.ndarray:
    # all n*n first minors of each matrix, shape (..., n, n, n-1, n-1)
    n = a.shape[-1]
    keep = np.array([[k for k in range(n) if k != i] for i in range(n)], dtype=np.intp)
    return a[..., keep[:, None, :, None], keep[None, :, None, :]]


def adjugate(m: MatrixLike) -> np.ndarray:
    """Adjugate (transposed cofactor matrix).

    ``adj[j, i] = (-1)**(i+j) * det(minor(m, {i}, {j}))``, so that
    ``m @ adj == det(m) * I``.
    """
    a = _as_square(m)
    n = a.shape[-1]
    if n == 0:
        raise DimensionError("adjugate needs n >= 1")
    if n == 1:
        return np.ones_like(a)
    minors = det(_cofactor_stack(a))
    signs = (-1.0) ** np.add.outer(np.arange(n), np.arange(n))
    return np.swapaxes(signs * minors, -1, -2)


def sym_eigenvalues(a: MatrixLike) -> np.ndarray:
    """Eigenvalues of a symmetric matrix (or stack), sorted ascending."""
    arr = _as_square(a)
    return np.linalg.eigvalsh(arr)


def _singular_mask(eigs: np.ndarray):
    mags = np.abs(eigs)
    lo = mags.min(axis=-1)
    thresh = SINGULAR_RTOL * mags.max(axis=-1)
    return lo, thresh, ~(lo > thresh)


def inverse_op_norms(stack: np.ndarray):
    """Spectral norms of the inverses of a stack of symmetric matrices.

    Returns ``(norms, degenerate)``; degenerate entries have ``norms = inf``.
    """
    eigs = sym_eigenvalues(stack)
    lo, _, bad = _singular_mask(eigs)
    with np.errstate(divide="ignore"):
        norms = np.where(bad, np.inf, 1.0 / lo)
    return norms, bad


def general_inverse_op_norms(stack: np.ndarray):
    """Spectral norms of inverses of arbitrary square matrices.

    The smallest singular value comes from the eigenvalues of ``M^T M``.
    Returns ``(norms, degenerate)`` like :func:`inverse_op_norms`.
    """
    a = _as_square(stack)
    gram = np.matmul(np.swapaxes(a, -1, -2), a)
    gram = 0.5 * (gram + np.swapaxes(gram, -1, -2))
    eigs = np.linalg.eigvalsh(gram)
    lo, _, bad = _singular_mask(eigs)
    with np.errstate(divide="ignore"):
        norms = np.where(bad, np.inf, 1.0 / np.sqrt(lo))
    return norms, bad


def inverse_op_norm(a: MatrixLike) -> float:
    """``||A^{-1}||`` for symmetric ``A``, computed as ``1 / min |lambda_i|``."""
    eigs = sym_eigenvalues(a)
    if eigs.ndim != 1:
        raise DimensionError("inverse_op_norm takes a single matrix; use inverse_op_norms for stacks")
    lo, thresh, bad = _singular_mask(eigs)
    if bad:
        raise SingularMatrixError(lo, thresh)
    return float(1.0 / lo)


def hs_norm(m: MatrixLike):
    """Hilbert-Schmidt (Frobenius) norm."""
    a = _as_array(m)
    # scale by the largest entry so squares cannot overflow
    s = np.max(np.abs(a), axis=(-2, -1), keepdims=True, initial=0.0)
    safe = np.where((s > 0) & np.isfinite(s), s, 1.0)
    b = a / safe
    out = np.sqrt(np.sum(b * b, axis=(-2, -1))) * safe[..., 0, 0]
    return np.where(np.isinf(s[..., 0, 0]), np.inf, out)


def inverse(a: MatrixLike) -> np.ndarray:
    """Inverse by pivoted elimination.

    Raises :class:`SingularMatrixError` if the matrix is numerically singular
    under the eigenvalue threshold. Symmetric input is expected; the
    threshold test uses its spectrum.
    """
    arr = _as_square(a)
    if arr.ndim != 2:
        raise DimensionError("inverse takes a single matrix")
    n = arr.shape[-1]
    eigs = sym_eigenvalues(arr)
    lo, thresh, bad = _singular_mask(eigs)
    if bad:
        raise SingularMatrixError(lo, thresh)
    return solve(arr, np.eye(n))
