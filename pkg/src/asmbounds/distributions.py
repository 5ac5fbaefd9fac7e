"""Input distributions and exact conditional samplers.

Each distribution exposes ``density``, ``sample`` and ``conditional``.  The
conditional law of ``Z = W2^T X`` given ``Y = W1^T X = y`` is available
exactly in these cases:

* Gaussian, any split (conditional normal);
* uniform box or product exponential with one inactive direction (a uniform
  or truncated exponential law on a chord);
* product exponential with one active direction parallel to the rate vector
  (uniform on a simplex slice).

Everything else raises :class:`UnsupportedConditionalError`.
"""

import math

import numpy as np

from . import exp_analysis
from .errors import InvalidInputError, UnsupportedConditionalError
from .linalg import OrthogonalSplit, SymmetricMatrix, rotation_2d, rotation_to_direction
from .linalg import split as make_split

PI4_ROUTE_TOL = 1e-9


def _points(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != dim:
        raise InvalidInputError(f"expected points of dimension {dim}, got {x.shape[-1]}")
    return x, single


class Distribution:
    dim = None

    def density(self, x):
        x, single = _points(x, self.dim)
        out = self._density(x)
        return float(out[0]) if single else out

    def bounds(self):
        """Componentwise closure of the support as ``(lower, upper)``."""
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def conditional(self, split, y):
        """Law of ``Z`` given ``Y = y`` (``y`` of shape ``(k,)`` or ``(B, k)``)."""
        raise UnsupportedConditionalError(f"no conditional sampler for {type(self).__name__}")


class ProductExponential(Distribution):
    """Independent exponentials with rates ``nu`` on the nonnegative orthant."""

    def __init__(self, rates):
        nu = np.asarray(rates, dtype=float).ravel()
        if nu.size < 1 or not np.all(np.isfinite(nu)) or np.any(nu <= 0):
            raise InvalidInputError("rates must be finite and positive")
        self.rates = nu
        self.dim = nu.size

    @classmethod
    def unit(cls, n):
        return cls(np.ones(n))

    def _density(self, x):
        inside = np.all(x >= 0, axis=1)
        log_norm = float(np.sum(np.log(self.rates)))
        return np.where(inside, np.exp(log_norm - np.where(inside, x @ self.rates, 0.0)), 0.0)

    def sample(self, rng, count):
        return rng.standard_exponential((int(count), self.dim)) / self.rates

    def mean(self):
        return 1.0 / self.rates

    def bounds(self):
        return np.zeros(self.dim), np.full(self.dim, np.inf)

    def conditional(self, split, y):
        y = np.asarray(y, dtype=float)
        if split.n != self.dim:
            raise InvalidInputError("split dimension does not match the distribution")
        if split.n - split.k == 1:
            return IntervalSlice.from_chord(split, y, *self.bounds(), rates=self.rates)
        if split.k == 1:
            return SimplexSlice(split, y, self.rates)
        raise UnsupportedConditionalError(
            "product exponential conditionals need n - k = 1 or k = 1 with W1 parallel to the rates"
        )


class Gaussian(Distribution):
    """Multivariate normal ``N(mean, cov)`` with positive definite ``cov``."""

    def __init__(self, mean, cov):
        m = np.asarray(mean, dtype=float).ravel()
        S = SymmetricMatrix(cov)
        if S.dim != m.size:
            raise InvalidInputError("mean and covariance dimensions differ")
        try:
            self._chol = np.linalg.cholesky(S.entries)
        except np.linalg.LinAlgError as exc:
            raise InvalidInputError("covariance is not positive definite") from exc
        self.mean = m
        self.cov = S.entries
        self.dim = m.size
        self._isotropic = bool(np.all(self.cov == self.cov[0, 0] * np.eye(self.dim)))

    @classmethod
    def standard(cls, n):
        return cls(np.zeros(n), np.eye(n))

    def _density(self, x):
        d = np.linalg.solve(self._chol, (x - self.mean).T)
        log_det = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return np.exp(-0.5 * np.sum(d * d, axis=0) - 0.5 * (self.dim * math.log(2 * math.pi) + log_det))

    def sample(self, rng, count):
        return self.mean + rng.standard_normal((int(count), self.dim)) @ self._chol.T

    def conditional(self, split, y):
        if split.n != self.dim:
            raise InvalidInputError("split dimension does not match the distribution")
        W1, W2 = split.W1, split.W2
        y = np.asarray(y, dtype=float)
        m1, m2 = W1.T @ self.mean, W2.T @ self.mean
        if self._isotropic:
            # rotational symmetry: Y and Z independent
            cov = self.cov[0, 0] * np.eye(split.n - split.k)
            return GaussianSlice(split, y, np.broadcast_to(m2, y.shape[:-1] + m2.shape), cov)
        S11 = W1.T @ self.cov @ W1
        S21 = W2.T @ self.cov @ W1
        S22 = W2.T @ self.cov @ W2
        gain = np.linalg.solve(S11, S21.T).T
        mean = m2 + (y - m1) @ gain.T
        schur = S22 - gain @ S21.T
        return GaussianSlice(split, y, mean, 0.5 * (schur + schur.T))


class UniformBox(Distribution):
    """Uniform law on the box ``[lower, upper]``."""

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float).ravel()
        hi = np.asarray(upper, dtype=float).ravel()
        if lo.shape != hi.shape or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise InvalidInputError("box bounds must be finite vectors of equal length")
        if np.any(hi <= lo):
            raise InvalidInputError("need lower < upper componentwise")
        self.lower, self.upper = lo, hi
        self.dim = lo.size
        self.volume = float(np.prod(hi - lo))

    def _density(self, x):
        inside = np.all((x >= self.lower) & (x <= self.upper), axis=1)
        return np.where(inside, 1.0 / self.volume, 0.0)

    def sample(self, rng, count):
        return self.lower + (self.upper - self.lower) * rng.random((int(count), self.dim))

    def bounds(self):
        return self.lower.copy(), self.upper.copy()

    @property
    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def conditional(self, split, y):
        if split.n != self.dim:
            raise InvalidInputError("split dimension does not match the distribution")
        if split.n - split.k != 1:
            raise UnsupportedConditionalError("uniform box conditionals need n - k = 1")
        return IntervalSlice.from_chord(split, np.asarray(y, dtype=float), self.lower, self.upper)


class ConditionalSlice:
    """Law of ``Z | Y = y`` for a batch of ``y`` values.

    ``sample(rng, count)`` returns an array of shape ``(B, count, n - k)`` for
    batched ``y`` and ``(count, n - k)`` for a single ``y``.
    """

    def __init__(self, split, y):
        y = np.asarray(y, dtype=float)
        self.single = y.ndim == 1
        y = np.atleast_2d(y)
        if y.shape[-1] != split.k:
            raise InvalidInputError(f"y must have {split.k} entries")
        self.split = split
        self.y = y

    def _out(self, z):
        return z[0] if self.single else z

    def lift(self, z):
        """Map inactive coordinates back to ``x = W1 y + W2 z``."""
        z = np.asarray(z)
        if self.single:
            return self.y[0] @ self.split.W1.T + z @ self.split.W2.T
        return (self.y @ self.split.W1.T)[:, None, :] + z @ self.split.W2.T


class IntervalSlice(ConditionalSlice):
    """Density proportional to ``exp(-rate * z)`` on ``[lo, hi]`` (one inactive direction).

    ``rate = 0`` (or a negligible ``rate * width``) is the uniform law.
    """

    def __init__(self, split, y, lo, hi, rate):
        super().__init__(split, y)
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        self.rate = np.broadcast_to(np.asarray(rate, dtype=float), self.lo.shape).copy()
        if np.any(~(self.hi > self.lo)):
            raise InvalidInputError("y lies outside the support of Y (empty conditional support)")
        if np.any(np.isinf(self.hi) & (self.rate <= 0)) or np.any(np.isinf(self.lo)):
            raise InvalidInputError("conditional law is not normalizable")

    @classmethod
    def from_chord(cls, split, y, lower, upper, rates=None):
        y2 = np.atleast_2d(y)
        base = y2 @ split.W1.T  # (B, n)
        w = split.W2[:, 0]
        lo = np.full(base.shape[0], -np.inf)
        hi = np.full(base.shape[0], np.inf)
        for j in range(split.n):
            if w[j] == 0.0:
                outside = (base[:, j] < lower[j]) | (base[:, j] > upper[j])
                hi = np.where(outside, -np.inf, hi)
                continue
            a = (lower[j] - base[:, j]) / w[j]
            b = (upper[j] - base[:, j]) / w[j]
            lo = np.maximum(lo, np.minimum(a, b))
            hi = np.minimum(hi, np.maximum(a, b))
        rate = 0.0 if rates is None else float(np.asarray(rates) @ w)
        if np.asarray(y).ndim == 1:
            y2 = y2[0]
        return cls(split, y2, lo, hi, rate)

    @property
    def width(self):
        return self.hi - self.lo

    def _unit_draws(self, u):
        # u in [0, 1): offsets from the heavier endpoint, shape (B, count)
        r = np.abs(self.rate)[:, None]
        w = self.width[:, None]
        t = r * w
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            expo = np.where(np.isinf(w), -np.log1p(-u) / r, -np.log1p(u * np.expm1(-t)) / r)
        return np.where(t < 1e-12, u * np.where(np.isinf(w), 0.0, w), expo)

    def sample(self, rng, count):
        u = rng.random((self.lo.size, int(count)))
        off = self._unit_draws(u)
        z = np.where(self.rate[:, None] >= 0, self.lo[:, None] + off, self.hi[:, None] - off)
        return self._out(z[..., None])

    def cdf(self, z):
        """Conditional CDF (single ``y`` only)."""
        z = np.asarray(z, dtype=float)
        lo, hi, r = self.lo[0], self.hi[0], self.rate[0]
        w = hi - lo
        zc = np.clip(z, lo, hi)
        if abs(r) * w < 1e-12:
            return (zc - lo) / w
        if r > 0:
            den = -1.0 if math.isinf(w) else math.expm1(-r * w)
            return np.expm1(-r * (zc - lo)) / den
        return 1.0 - np.expm1(r * (hi - zc)) / math.expm1(r * w)

    def variance(self):
        r = np.abs(self.rate)
        w = self.width
        out = np.empty_like(w)
        for j in range(w.size):
            if math.isinf(w[j]):
                out[j] = 1.0 / r[j] ** 2
            else:
                out[j] = w[j] ** 2 * exp_analysis._trunc_exp_var_scaled(r[j] * w[j])
        return float(out[0]) if self.single else out


class SimplexSlice(ConditionalSlice):
    """Uniform law on ``{x >= 0 : nu^T x = |nu| y1}`` seen through ``W2``.

    Requires a single active direction parallel to the rate vector ``nu``.
    """

    def __init__(self, split, y, rates):
        super().__init__(split, y)
        nu = np.asarray(rates, dtype=float)
        w1 = split.W1[:, 0]
        cos = float(w1 @ nu) / np.linalg.norm(nu)
        if abs(abs(cos) - 1.0) > 1e-12:
            raise UnsupportedConditionalError("W1 is not parallel to the rate vector")
        level = math.copysign(1.0, cos) * np.linalg.norm(nu) * self.y[:, 0]
        if np.any(level <= 0):
            raise InvalidInputError("y1 lies outside the support of Y")
        self.rates = nu
        self.level = level  # nu^T x on the slice

    def sample_x(self, rng, count):
        """Points ``x`` on the slice, shape ``(B, count, n)`` (flat Dirichlet)."""
        e = rng.standard_exponential((self.level.size, int(count), self.split.n))
        d = e / e.sum(axis=-1, keepdims=True)
        return d * (self.level[:, None, None] / self.rates)

    def sample(self, rng, count):
        return self._out(self.sample_x(rng, count) @ self.split.W2)


class GaussianSlice(ConditionalSlice):
    def __init__(self, split, y, mean, cov):
        super().__init__(split, y)
        self.mean = np.atleast_2d(mean)
        self.cov = np.asarray(cov, dtype=float)
        self._chol = np.linalg.cholesky(self.cov)

    def sample(self, rng, count):
        B = self.mean.shape[0]
        g = rng.standard_normal((B, int(count), self.cov.shape[0]))
        return self._out(self.mean[:, None, :] + g @ self._chol.T)

    def variance(self):
        return np.diag(self.cov).copy()


def _rotation_split(W, k):
    return make_split(W, np.zeros(W.shape[0]), k)


def conditional_sampler_exp2d(theta, y):
    """Law of ``Z | Y = y`` for the unit-rate 2-D exponential under ``R_theta``.

    Angles within ``1e-9`` of ``pi/4`` give the exact uniform law on ``[-y, y]``.
    """
    theta = float(theta)
    y = float(y)
    sp = _rotation_split(rotation_2d(theta), 1)
    if abs(theta - exp_analysis.PI4) < PI4_ROUTE_TOL:
        if not y > 0:
            raise InvalidInputError(f"y={y} outside the support of Y")
        return IntervalSlice(sp, np.array([y]), -y, y, 0.0)
    return IntervalSlice.from_chord(sp, np.array([y]), np.zeros(2), np.full(2, np.inf), rates=np.ones(2))


def simplex_rotation(n):
    """The rotation taking ``e1`` to ``(1, ..., 1) / sqrt(n)``."""
    return rotation_to_direction(np.ones(n))


def conditional_sampler_simplex(n, k, y1, rng, count=1):
    """Draw ``(y_check, z)`` given ``Y1 = y1`` for the unit-rate exponential.

    Returns an array of shape ``(count, n - 1)``: the rotated coordinates
    ``2..n`` of points uniform on ``{x >= 0 : sum x = sqrt(n) y1}``.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise InvalidInputError("n must be an integer >= 2")
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n - 1):
        raise InvalidInputError(f"k must be in [1, {n - 1}]")
    if not y1 > 0:
        raise InvalidInputError(f"y1 must be positive, got {y1}")
    W = simplex_rotation(n)
    sl = SimplexSlice(_rotation_split(W, 1), np.array([float(y1)]), np.ones(n))
    x = sl.sample_x(rng, count)[0]
    return x @ W[:, 1:]


def marginal_rho_y_pi4(y):
    """Density ``2 y exp(-sqrt(2) y)`` of ``Y`` at ``theta = pi/4``."""
    y = np.asarray(y, dtype=float)
    out = np.where(y >= 0, 2.0 * y * np.exp(-math.sqrt(2.0) * np.maximum(y, 0.0)), 0.0)
    return float(out) if out.ndim == 0 else out


__all__ = [
    "ConditionalSlice",
    "Gaussian",
    "GaussianSlice",
    "IntervalSlice",
    "OrthogonalSplit",
    "ProductExponential",
    "SimplexSlice",
    "UniformBox",
    "conditional_sampler_exp2d",
    "conditional_sampler_simplex",
    "marginal_rho_y_pi4",
    "simplex_rotation",
]
