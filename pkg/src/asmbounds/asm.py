"""Active subspace pipeline.

Estimate ``C = E[grad f grad f^T]``, split its eigenbasis into active and
inactive columns, evaluate the conditional-mean surrogate ``g(y)`` and
estimate the mean squared error of ``f(x) ~ g(W1^T x)`` by nested Monte Carlo.

The MSE estimator multiplies two independent half-sample estimates of
``g``: ``E[(f - g_a)(f - g_b) | x] = (f - g)^2`` exactly, so the average is
unbiased.  Squaring a single inner mean would add ``Var_inner / M``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EvaluationError, InvalidInputError
from .linalg import SymmetricMatrix, jacobi_eigh
from .linalg import split as make_split

DEFAULT_INNER = 256
DEFAULT_OUTER = 10_000
OUTER_CHUNK = 512


class ObjectiveFunction:
    """A scalar function on ``R^n`` with its gradient.

    ``value`` maps points of shape ``(N, n)`` to ``(N,)``; ``gradient`` maps
    ``(N, n)`` to ``(N, n)``.  Without an analytic gradient, central
    differences with step ``1e-5 * (1 + |x_i|)`` are used, switching to
    second-order one-sided stencils where a central step would leave
    ``[lower, upper]``.  ``grad_bound`` is a certified ``L`` with
    ``|grad f|^2 <= L``, if known.
    """

    def __init__(self, value, dim, gradient=None, grad_bound=None, lower=None, upper=None):
        if not (isinstance(dim, (int, np.integer)) and dim >= 1):
            raise InvalidInputError(f"dim must be a positive integer, got {dim}")
        self.dim = int(dim)
        self._value = value
        self._gradient = gradient
        self.grad_bound = None if grad_bound is None else float(grad_bound)
        self.lower = np.full(self.dim, -np.inf) if lower is None else np.asarray(lower, dtype=float)
        self.upper = np.full(self.dim, np.inf) if upper is None else np.asarray(upper, dtype=float)

    @property
    def has_analytic_gradient(self):
        return self._gradient is not None

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[-1] != self.dim:
            raise InvalidInputError(f"expected points of dimension {self.dim}, got {x.shape[-1]}")
        return x, single

    def __call__(self, x):
        x, single = self._points(x)
        v = np.asarray(self._value(x), dtype=float).reshape(x.shape[0])
        return float(v[0]) if single else v

    def gradient(self, x):
        x, single = self._points(x)
        if self._gradient is not None:
            g = np.asarray(self._gradient(x), dtype=float).reshape(x.shape)
        else:
            g = self._fd_gradient(x)
        return g[0] if single else g

    def _fd_gradient(self, x, h_rel=1e-5):
        N, n = x.shape
        g = np.empty_like(x)
        f0 = None
        for i in range(n):
            h = h_rel * (1.0 + np.abs(x[:, i]))
            e = np.zeros_like(x)
            e[:, i] = h
            up = x[:, i] + h <= self.upper[i]
            down = x[:, i] - h >= self.lower[i]
            up2 = x[:, i] + 2 * h <= self.upper[i]
            central = up & down
            # stencil points that would leave [lower, upper] are never evaluated
            fp = self(np.where(up[:, None], x + e, x))
            fm = self(np.where(down[:, None], x - e, x))
            col = (fp - fm) / (2 * h)
            if not np.all(central):
                f0 = self(x) if f0 is None else f0
                fwd = (-3 * f0 + 4 * fp - self(np.where(up2[:, None], x + 2 * e, x))) / (2 * h)
                bwd = (3 * f0 - 4 * fm + self(np.where(up2[:, None], x, x - 2 * e))) / (2 * h)
                col = np.where(central, col, np.where(up2, fwd, bwd))
            g[:, i] = col
        return g

    def check_gradient(self, points, rtol=1e-4):
        """Largest relative gap between the analytic and finite-difference gradients."""
        x, _ = self._points(points)
        ga = self.gradient(x)
        gf = self._fd_gradient(x)
        scale = np.maximum(np.linalg.norm(gf, axis=1), 1e-8)
        worst = float(np.max(np.linalg.norm(ga - gf, axis=1) / scale))
        return worst, worst <= rtol


def _worker_sizes(total, workers):
    base, extra = divmod(int(total), int(workers))
    return [base + (1 if w < extra else 0) for w in range(int(workers))]


def _run_workers(task, sizes, rngs):
    if len(sizes) == 1:
        return [task(sizes[0], rngs[0])]
    with ThreadPoolExecutor(max_workers=len(sizes)) as pool:
        return list(pool.map(task, sizes, rngs))


def _check_dims(f, dist):
    if dist.dim != f.dim:
        raise InvalidInputError(f"distribution has dimension {dist.dim}, function has {f.dim}")


def estimate_C(f, dist, N, rng, workers=1):
    """Monte Carlo estimate ``(1/N) sum grad f(x_i) grad f(x_i)^T`` with ``x_i ~ dist``.

    Each worker draws from its own child stream of ``rng`` and partial sums
    are added in worker order, so the result depends only on the seed and
    the worker count.
    """
    _check_dims(f, dist)
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise InvalidInputError(f"N must be a positive integer, got {N}")
    if workers < 1:
        raise InvalidInputError("workers must be at least 1")
    sizes = _worker_sizes(N, workers)

    def task(size, r):
        acc = np.zeros((f.dim, f.dim))
        done = 0
        while done < size:
            m = min(OUTER_CHUNK * 8, size - done)
            x = dist.sample(r, m)
            g = f.gradient(x)
            bad = ~np.all(np.isfinite(g), axis=1)
            if np.any(bad):
                p = x[int(np.argmax(bad))]
                raise EvaluationError(f"gradient is not finite at {p}", point=p)
            acc += g.T @ g
            done += m
        return acc

    parts = _run_workers(task, sizes, rng.spawn(len(sizes)))
    total = np.zeros((f.dim, f.dim))
    for p in parts:
        total += p
    return SymmetricMatrix(total / N)


@dataclass(frozen=True, eq=False)
class ActiveSubspaceModel:
    """Active/inactive split of an estimated ``C`` together with its input law."""

    split: object
    distribution: object
    inner_samples: int
    C_hat: SymmetricMatrix

    @property
    def k(self):
        return self.split.k

    @property
    def eigenvalues(self):
        return self.split.eigenvalues

    @property
    def inactive_trace(self):
        return max(self.split.inactive_trace, 0.0)

    def y(self, x):
        return np.asarray(x, dtype=float) @ self.split.W1

    def z(self, x):
        return np.asarray(x, dtype=float) @ self.split.W2

    def lift(self, y, z):
        return np.asarray(y, dtype=float) @ self.split.W1.T + np.asarray(z, dtype=float) @ self.split.W2.T

    @classmethod
    def from_basis(cls, W, k, distribution=None, inner_samples=DEFAULT_INNER, eigenvalues=None):
        """Model with a prescribed orthogonal basis instead of an estimated one."""
        W = np.asarray(W, dtype=float)
        lam = np.zeros(W.shape[0]) if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
        C = SymmetricMatrix(W @ np.diag(lam) @ W.T)
        return cls(make_split(W, lam, k), distribution, int(inner_samples), C)


def active_subspace(C, k, distribution=None, inner_samples=DEFAULT_INNER):
    """Eigendecompose ``C`` and keep the leading ``k`` eigenvectors as the active part."""
    C = C if isinstance(C, SymmetricMatrix) else SymmetricMatrix(C)
    n = C.dim
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n - 1):
        raise InvalidInputError(f"k must be an integer in [1, {n - 1}], got {k}")
    if inner_samples < 2:
        raise InvalidInputError("need at least two inner samples")
    lam, W = jacobi_eigh(C)
    scale = max(1.0, float(np.max(np.abs(lam))))
    if lam[-1] < -1e-10 * scale:
        raise InvalidInputError(f"C is not positive semidefinite (smallest eigenvalue {lam[-1]})")
    lam = np.maximum(lam, 0.0)
    return ActiveSubspaceModel(make_split(W, lam, int(k)), distribution, int(inner_samples), C)


def _inner_values(model, f, y, rng, count):
    # f at lifted conditional draws, shape (B, count)
    cond = model.distribution.conditional(model.split, y)
    z = cond.sample(rng, count)
    if cond.single:
        z = z[None]
    x = np.atleast_2d(y) @ model.split.W1.T
    pts = x[:, None, :] + z @ model.split.W2.T
    vals = f(pts.reshape(-1, model.split.n)).reshape(pts.shape[:2])
    if not np.all(np.isfinite(vals)):
        b, j = np.argwhere(~np.isfinite(vals))[0]
        raise EvaluationError(f"f is not finite at {pts[b, j]}", point=pts[b, j])
    return vals


def surrogate_g(model, f, y, rng, inner_samples=None):
    """Monte Carlo value of ``g(y) = E[f(X) | W1^T X = y]`` and its standard error."""
    M = model.inner_samples if inner_samples is None else int(inner_samples)
    if M < 2:
        raise InvalidInputError("need at least two inner samples")
    y = np.asarray(y, dtype=float).ravel()
    vals = _inner_values(model, f, y, rng, M)[0]
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(M))


class MSEEstimate(NamedTuple):
    mse: float
    stderr: float
    plugin: float


def mse_estimate(model, f, N_outer=DEFAULT_OUTER, rng=None, inner_samples=None, workers=1):
    """Unbiased nested Monte Carlo estimate of ``E[(f(X) - g(W1^T X))^2]``.

    Returns ``(mse, stderr, plugin)``; ``plugin`` squares the full inner mean
    and carries the ``O(1/M)`` upward bias.
    """
    if model.distribution is None:
        raise InvalidInputError("model has no input distribution")
    _check_dims(f, model.distribution)
    M = model.inner_samples if inner_samples is None else int(inner_samples)
    if M < 2:
        raise InvalidInputError("need at least two inner samples")
    if not (isinstance(N_outer, (int, np.integer)) and N_outer >= 2):
        raise InvalidInputError("N_outer must be an integer >= 2")
    half = M // 2
    sizes = _worker_sizes(N_outer, workers)

    def task(size, r):
        terms, plug = [], []
        done = 0
        while done < size:
            m = min(OUTER_CHUNK, size - done)
            x = model.distribution.sample(r, m)
            fx = f(x)
            vals = _inner_values(model, f, model.y(x), r, M)
            ga = vals[:, :half].mean(axis=1)
            gb = vals[:, half:].mean(axis=1)
            terms.append((fx - ga) * (fx - gb))
            plug.append((fx - vals.mean(axis=1)) ** 2)
            done += m
        return np.concatenate(terms), np.concatenate(plug)

    parts = _run_workers(task, sizes, rng.spawn(len(sizes)))
    t = np.concatenate([p[0] for p in parts])
    pl = np.concatenate([p[1] for p in parts])
    return MSEEstimate(float(t.mean()), float(t.std(ddof=1) / np.sqrt(t.size)), float(pl.mean()))
