"""Small dense symmetric linear algebra.

Cyclic Jacobi eigendecomposition with a deterministic ordering and sign
convention, rotation builders, and the active/inactive column split.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NoConvergenceError

MAX_SWEEPS = 100
OFF_DIAGONAL_RTOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """A real square matrix stored exactly symmetric.

    Inputs that are symmetric up to ``atol`` (relative to the largest entry)
    are accepted and replaced by ``(A + A.T) / 2``.
    """

    entries: np.ndarray

    def __init__(self, entries, atol=1e-12):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.T)) > atol * scale:
            raise InvalidInputError("matrix is not symmetric")
        object.__setattr__(self, "entries", _frozen(0.5 * (a + a.T)))

    @property
    def dim(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


def _as_square(m):
    if isinstance(m, SymmetricMatrix):
        return np.array(m.entries)
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return 0.5 * (a + a.T)


def _fix_signs(V, rtol=1e-12):
    # largest-magnitude entry nonnegative; near-ties go to the lowest index
    V = V.copy()
    for j in range(V.shape[1]):
        col = np.abs(V[:, j])
        top = col.max()
        i = int(np.flatnonzero(col >= top * (1.0 - rtol))[0])
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def jacobi_eigh(m):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Parameters
    ----------
    m : SymmetricMatrix or array_like (n, n)

    Returns
    -------
    eigenvalues : ndarray (n,)
        Sorted descending; ties keep their original diagonal order.
    eigenvectors : ndarray (n, n)
        Orthogonal; column ``j`` belongs to ``eigenvalues[j]``.  In every
        column the entry of largest magnitude is nonnegative.
    """
    A = _as_square(m)
    n = A.shape[0]
    V = np.eye(n)
    target = OFF_DIAGONAL_RTOL * np.linalg.norm(A)
    upper = np.triu_indices(n, 1)

    def off(a):
        # summed directly; |A|_F^2 - |diag|^2 cancels to noise near convergence
        return np.sqrt(2.0) * np.linalg.norm(a[upper])

    sweeps = 0
    while off(A) > target:
        if sweeps == MAX_SWEEPS:
            raise NoConvergenceError(
                f"Jacobi did not converge in {MAX_SWEEPS} sweeps", partial=(np.diag(A).copy(), V)
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                with np.errstate(over="ignore", divide="ignore"):
                    tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                # smaller root of t^2 + 2 tau t - 1 = 0; t -> 0 as |tau| -> inf
                t = math.copysign(1.0 / (abs(tau) + math.hypot(1.0, tau)), tau)
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                J = np.array([[c, s], [-s, c]])
                A[:, [p, q]] = A[:, [p, q]] @ J
                A[[p, q], :] = J.T @ A[[p, q], :]
                A[p, q] = A[q, p] = 0.0
                V[:, [p, q]] = V[:, [p, q]] @ J

    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")
    return lam[order], _fix_signs(V[:, order])


def rotation_2d(theta):
    """Counter-clockwise rotation by ``theta`` radians."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_to_direction(v):
    """Proper rotation whose first column is ``v / |v|``.

    The remaining columns come from modified Gram-Schmidt over the axis
    basis, skipping the axis most parallel to ``v``.  If the completion has
    determinant -1 the last column is negated.
    """
    v = np.asarray(v, dtype=float).ravel()
    n = v.size
    norm = np.linalg.norm(v)
    if n < 2 or not np.isfinite(norm) or norm == 0.0:
        raise InvalidInputError("need a finite nonzero vector with at least two entries")
    u = v / norm
    skip = int(np.argmax(np.abs(u)))
    cols = [u]
    for j in range(n):
        if j == skip:
            continue
        w = np.zeros(n)
        w[j] = 1.0
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for c in cols:
                w = w - (c @ w) * c
        cols.append(w / np.linalg.norm(w))
    R = np.column_stack(cols)
    if np.linalg.det(R) < 0:
        R[:, -1] = -R[:, -1]
    return R


@dataclass(frozen=True, eq=False)
class OrthogonalSplit:
    """Orthogonal basis ``W = (W1 | W2)`` with its descending eigenvalues."""

    W: np.ndarray
    eigenvalues: np.ndarray
    k: int

    @property
    def n(self):
        return self.W.shape[0]

    @property
    def W1(self):
        return self.W[:, : self.k]

    @property
    def W2(self):
        return self.W[:, self.k :]

    @property
    def active_eigenvalues(self):
        return self.eigenvalues[: self.k]

    @property
    def inactive_eigenvalues(self):
        return self.eigenvalues[self.k :]

    @property
    def inactive_trace(self):
        return float(np.sum(self.eigenvalues[self.k :]))


def split(W, eigenvalues, k):
    """Split an orthogonal basis after its first ``k`` columns."""
    W = np.asarray(W, dtype=float)
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    n = W.shape[0]
    if W.shape != (n, n) or lam.size != n:
        raise InvalidInputError("W must be n x n with n eigenvalues")
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n - 1):
        raise InvalidInputError(f"k must be an integer in [1, {n - 1}], got {k}")
    if np.max(np.abs(W.T @ W - np.eye(n))) > 1e-10:
        raise InvalidInputError("W is not orthogonal")
    if np.any(np.diff(lam) > 0):
        raise InvalidInputError("eigenvalues must be sorted descending")
    if np.any(lam < -1e-10):
        raise InvalidInputError("eigenvalues must be nonnegative")
    return OrthogonalSplit(_frozen(W), _frozen(lam), int(k))
