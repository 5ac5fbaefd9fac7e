"""Poincare-type constants and mean-squared-error bound assembly.

Every bound has the form ``constant * trace ** exponent`` where ``trace`` is
the inactive trace.  Classical regimes (compact convex support, Gaussian,
alpha-uniformly log-concave) have exponent 1; the generalized regime trades
the exponent down to ``1 / (1 + eps)`` for a finite constant.

Moments of conditional variances and of the random Poincare constant are
inputs here, never integrated.  An infinite moment is legitimate (the
constant does not exist); such constants are returned as ``math.inf`` rather
than raised, so callers can observe them.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .exp_analysis import K_BOBKOV
from .linalg import SymmetricMatrix, jacobi_eigh

__all__ = [
    "K_BOBKOV",
    "AlphaUniform",
    "BoundReport",
    "CompactConvex",
    "GaussianExact",
    "GeneralizedEps",
    "bobkov_sandwich",
    "bound_rhs",
    "cvar_w",
    "generalized_eps_constant",
    "generalized_eps_upper",
    "poincare_alpha_uniform",
    "poincare_compact_convex",
    "poincare_gaussian",
]


def _positive(name, value):
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise InvalidInputError(f"{name} must be positive and finite, got {value}")
    return value


def poincare_compact_convex(diam, delta, D):
    """``diam / pi * D / delta`` for densities ``delta <= rho <= D`` on a convex body."""
    diam, delta, D = _positive("diam", diam), _positive("delta", delta), _positive("D", D)
    if delta > D:
        raise InvalidInputError("need delta <= D")
    return diam / math.pi * D / delta


def poincare_gaussian(cov):
    """Largest eigenvalue of a positive definite covariance."""
    lam = jacobi_eigh(SymmetricMatrix(cov))[0]
    if lam[-1] <= 0:
        raise InvalidInputError("covariance is not positive definite")
    return float(lam[0])


def poincare_alpha_uniform(alpha):
    """``1 / alpha`` for alpha-uniformly log-concave densities."""
    return 1.0 / _positive("alpha", alpha)


def bobkov_sandwich(conditional_vars, lower_var):
    """Lower and upper ends of the Bobkov bracket on a conditional Poincare constant.

    The lower end is ``Var(|Z - z0| | Y = y)``; the upper end is
    ``K * sum_i Var(Z_i | Y = y)``.
    """
    v = np.atleast_1d(np.asarray(conditional_vars, dtype=float))
    lower = float(lower_var)
    if np.any(v < 0) or lower < 0:
        raise InvalidInputError("variances must be nonnegative")
    upper = K_BOBKOV * float(np.sum(v))
    if lower > upper:
        raise AssertionError("inconsistent variance inputs: lower end exceeds upper end")
    return lower, upper


def _eps(eps):
    return _positive("eps", eps)


def cvar_w(eps, moments):
    """``(sum_i E[Var(Z_i|Y)^p])^(eps/(1+eps))`` with ``p = (1+eps)/eps``.

    Returns ``math.inf`` when any moment is infinite.
    """
    eps = _eps(eps)
    m = np.atleast_1d(np.asarray(moments, dtype=float))
    if np.any(np.isnan(m)) or np.any(m < 0):
        raise InvalidInputError("moments must be nonnegative numbers")
    total = float(np.sum(m))
    if math.isinf(total):
        return math.inf
    return total ** (eps / (1 + eps))


def generalized_eps_constant(L, eps, moment_cy):
    """``L^(eps/(1+eps)) * E[C_Y^p]^(eps/(1+eps))``; ``inf`` for an infinite moment."""
    L, eps = _positive("L", L), _eps(eps)
    moment_cy = float(moment_cy)
    if math.isnan(moment_cy) or moment_cy < 0:
        raise InvalidInputError("moment must be nonnegative")
    if math.isinf(moment_cy):
        return math.inf
    q = eps / (1 + eps)
    return L**q * moment_cy**q


def generalized_eps_upper(L, eps, n, k, cvar):
    """Upper bound ``L^(eps/(1+eps)) * K * (n-k)^(1/(1+eps)) * C_Var,W`` on the generalized constant."""
    L, eps = _positive("L", L), _eps(eps)
    if not 1 <= k <= n - 1:
        raise InvalidInputError("need 1 <= k <= n - 1")
    if math.isinf(cvar):
        return math.inf
    return L ** (eps / (1 + eps)) * K_BOBKOV * (n - k) ** (1 / (1 + eps)) * float(cvar)


@dataclass(frozen=True)
class CompactConvex:
    diam: float
    delta: float
    D: float
    tag = "CompactConvex"
    exponent = 1.0

    def constant(self):
        return poincare_compact_convex(self.diam, self.delta, self.D)


@dataclass(frozen=True)
class GaussianExact:
    cov: np.ndarray
    tag = "GaussianExact"
    exponent = 1.0

    def constant(self):
        return poincare_gaussian(self.cov)


@dataclass(frozen=True)
class AlphaUniform:
    alpha: float
    tag = "AlphaUniform"
    exponent = 1.0

    def constant(self):
        return poincare_alpha_uniform(self.alpha)


@dataclass(frozen=True)
class GeneralizedEps:
    """Generalized regime with a precomputed constant (may be ``inf``)."""

    eps: float
    value: float
    tag = "GeneralizedEps"

    def __post_init__(self):
        _eps(self.eps)
        if math.isnan(self.value) or self.value < 0:
            raise InvalidInputError("constant must be nonnegative")

    @property
    def exponent(self):
        return 1.0 / (1.0 + self.eps)

    @classmethod
    def from_moment(cls, L, eps, moment_cy):
        return cls(eps, generalized_eps_constant(L, eps, moment_cy))

    @classmethod
    def from_cvar(cls, L, eps, n, k, cvar):
        return cls(eps, generalized_eps_upper(L, eps, n, k, cvar))

    def constant(self):
        return self.value


@dataclass(frozen=True)
class BoundReport:
    regime: str
    constant: float
    exponent: float
    rhs: float
    inactive_trace: float

    @property
    def bounded(self):
        return math.isfinite(self.rhs)


def bound_rhs(regime, inactive_trace):
    """Assemble ``constant * inactive_trace ** exponent`` for a regime."""
    trace = float(inactive_trace)
    if not trace >= 0:
        raise InvalidInputError(f"inactive trace must be nonnegative, got {trace}")
    const = regime.constant()
    exponent = regime.exponent
    rhs = math.inf if math.isinf(const) else const * trace**exponent
    return BoundReport(regime.tag, const, exponent, rhs, trace)
