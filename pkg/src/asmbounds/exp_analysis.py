"""Closed forms for independently exponentially distributed inputs.

Two dimensions: unit-rate ``X = (X1, X2)`` seen in coordinates
``(y, z) = R_theta^T x``.  The conditional law of ``Z`` given ``Y = y`` is a
(possibly truncated) exponential on an interval, its variance has a closed
form, and ``Q_eps(theta) = E[Var(Z|Y)^p]^(1/p)`` with ``p = (1 + eps) / eps``.

``n`` dimensions: the worst-case rotation maps ``e1`` to the diagonal; the
conditional law is then uniform on a regular simplex whose heights and volume
give a Gamma-moment bound and the constants ``C_eps(n, k)`` and
``C_exp^n = K L^(eps/(1+eps)) C_eps(n, k)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import GammaRangeError, InvalidInputError

K_BOBKOV = 432.0
PI4 = math.pi / 4
PI4_BRANCH_TOL = 1e-6
_SQRT2 = math.sqrt(2.0)
_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class ThetaParams:
    """Rotation-angle coefficients.

    ``a_plus`` and ``a_minus`` are the exponential rates of ``y`` and ``z``
    in the joint density.  ``a``, ``b``, ``c``, ``d`` are the coefficients of
    the variance formula for ``0 < theta < pi/4`` (``nan`` elsewhere).
    """

    theta: float
    a_plus: float
    a_minus: float
    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_theta(cls, theta):
        theta = float(theta)
        c, s = math.cos(theta), math.sin(theta)
        if 0.0 < theta < PI4:
            a = 1.0 / (s**4 * c**4)
            b = 1.0 / c - 1.0 / s
            cc = math.cos(4 * theta)
            d = math.sin(2 * theta)
        else:
            a = b = cc = d = math.nan
        return cls(theta, c + s, c - s, a, b, cc, d)


def _check_reduced(theta):
    theta = float(theta)
    if not (-PI4 - 1e-15 <= theta <= PI4 + 1e-15):
        raise InvalidInputError(f"theta={theta} outside [-pi/4, pi/4]; reduce it first")
    return min(max(theta, -PI4), PI4)


def _rate_minus(theta):
    # cos - sin without cancellation near pi/4
    return _SQRT2 * math.sin(PI4 - theta)


def reduce_theta(theta):
    """Map any angle to ``[-pi/4, pi/4]`` using pi-periodicity and both mirrors."""
    t = math.remainder(float(theta), math.pi)  # [-pi/2, pi/2]
    if t >= math.pi / 2:
        t -= math.pi
    if t < -PI4:
        t = -math.pi / 2 - t
    elif t > PI4:
        t = math.pi / 2 - t
    return t


def support_bounds_2d(theta, y):
    """Endpoints ``(l0, l1)`` of the support of ``Z | Y = y``.

    ``l1`` is ``inf`` when the interval is unbounded above.
    """
    theta = _check_reduced(theta)
    y = float(y)
    if theta < 0:
        phi = -theta
        l0 = y * math.tan(phi) if y >= 0 else -y / math.tan(phi)
        return l0, math.inf
    if y < 0:
        raise InvalidInputError(f"y={y} outside the support of Y for theta={theta}")
    if theta == 0:
        return 0.0, math.inf
    if abs(theta - PI4) < 1e-15:
        return -y, y
    return -y * math.tan(theta), y / math.tan(theta)


def marginal_density_2d(theta, y):
    """Density of ``Y`` for the rotated unit-rate 2-D exponential."""
    theta = _check_reduced(theta)
    y = float(y)
    if theta < 0:
        phi = -theta
        rate = 1.0 / math.cos(phi) if y >= 0 else 1.0 / math.sin(phi)
        return math.exp(-abs(y) * rate) / (math.cos(phi) + math.sin(phi))
    if y < 0:
        return 0.0
    if theta == 0:
        return math.exp(-y)
    c, s = math.cos(theta), math.sin(theta)
    r = _rate_minus(theta)
    if r == 0.0:
        return 2.0 * y * math.exp(-_SQRT2 * y)
    # (exp(-y/c) - exp(-y/s)) / (c - s), written without cancellation
    return -math.exp(-y / c) * math.expm1(-y * r / (s * c)) / r


def _trunc_exp_var_scaled(t):
    # Var of Exp(rate) truncated to a width w, divided by w^2, at t = rate * w:
    # 1/t^2 - 1/(4 sinh^2(t/2)).
    t = abs(t)
    if t < 0.05:
        t2 = t * t
        return 1.0 / 12 - t2 / 240 + t2 * t2 / 6048 - t2**3 / 172800
    if t < 1.0:
        return 1.0 / (t * t) - 0.25 / math.sinh(0.5 * t) ** 2
    # same quantity as exp(-t) / (1 - exp(-t))^2, which cannot overflow
    return 1.0 / (t * t) - math.exp(-t) / (-math.expm1(-t)) ** 2


def var_z_given_y(theta, y):
    """Conditional variance ``Var(Z | Y = y)`` for ``theta`` in ``[-pi/4, pi/4]``.

    For ``0 < theta < pi/4`` this equals the textbook coefficient form
    ``a/(8 b^2) * ((1 - 2e + e^2 - 8 e y^2 (1 - d)) / (e - 1)^2 - c)`` with
    ``e = exp(b y)``; it is evaluated as ``1/r^2 - w^2 e / (e - 1)^2``
    (``r`` the rate, ``w`` the interval width), which is the same expression
    simplified and stays accurate as ``b -> 0``.
    """
    theta = _check_reduced(theta)
    y = float(y)
    if theta < 0:
        phi = -theta
        return (math.cos(phi) + math.sin(phi)) ** -2
    if y < 0:
        raise InvalidInputError(f"y={y} outside the support of Y for theta={theta}")
    if theta == 0:
        return 1.0
    if abs(theta - PI4) < PI4_BRANCH_TOL:
        return y * y / 3.0
    s, c = math.sin(theta), math.cos(theta)
    w = y / (s * c)
    return w * w * _trunc_exp_var_scaled(_rate_minus(theta) * w)


def var_z_given_y_coefficients(theta, y):
    """The coefficient form of the positive-angle variance, evaluated literally.

    Loses accuracy as ``theta -> pi/4``; kept as a second evaluation path.
    """
    p = ThetaParams.from_theta(theta)
    if not 0.0 < p.theta < PI4:
        raise InvalidInputError("coefficient form needs 0 < theta < pi/4")
    e = math.exp(p.b * y)
    num = 1 - 2 * e + e * e - 8 * e * y * y * (1 - p.d)
    return p.a / (8 * p.b**2) * (num / (e - 1) ** 2 - p.c)


def var_bound_pos_theta(theta):
    """Bound ``a(1 - c) / (8 b^2)`` on ``Var(Z | Y)``, uniform in ``y``."""
    theta = float(theta)
    if not 0.0 < theta < PI4:
        raise InvalidInputError("the bound is finite only for 0 < theta < pi/4")
    p = ThetaParams.from_theta(theta)
    return p.a * (1 - p.c) / (8 * p.b**2)


def var_abs_z_pi4(y):
    """``Var(|Z| | Y = y)`` at ``theta = pi/4``, where ``|Z|`` is uniform on ``[0, y]``."""
    return float(y) ** 2 / 12.0


def log_moment_y_pi4(m):
    """``log E[Y^m]`` for ``Y`` with density ``2 y exp(-sqrt(2) y)``."""
    return math.log(2.0) + math.lgamma(m + 2) - (m + 2) * math.log(_SQRT2)


def moment_y_pi4(m):
    return math.exp(log_moment_y_pi4(m))


def _hoelder_p(eps):
    eps = float(eps)
    if not (eps > 0 and math.isfinite(eps)):
        raise InvalidInputError(f"eps must be positive, got {eps}")
    return (1.0 + eps) / eps


def _q_pos_theta(theta, eps):
    p = _hoelder_p(eps)
    s, c = math.sin(theta), math.cos(theta)
    r = _rate_minus(theta)

    def integrand(y):
        v = var_z_given_y(theta, y)
        return math.exp(p * math.log(v)) * marginal_density_2d(theta, y) if v > 0 else 0.0

    # integrand <= min((w^2/12)^p, r^-2p) * rho_Y with w = y/(s c) and
    # rho_Y <= min(w, 1/r) exp(-y/c); the Gamma tail of that envelope picks Ymax
    def tail_bound(ymax):
        m = 2 * p + 1
        log_a = -p * math.log(12.0 * (s * c) ** 2) - math.log(s * c)
        t1 = log_a + (m + 1) * math.log(c) + math.lgamma(m + 1)
        t1 += math.log(max(special.gammaincc(m + 1, ymax / c), 1e-300))
        t2 = -2 * p * math.log(r) - math.log(r) + math.log(c) - ymax / c
        return math.exp(min(t1, t2))

    ymax = 40.0 * c
    head = integrate.quad(integrand, 0.0, ymax, limit=400, epsabs=0.0, epsrel=1e-12)[0]
    while tail_bound(ymax) > 1e-14 * head:
        ymax *= 2.0
    total = 0.0
    edges = np.linspace(0.0, ymax, 9)
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(integrand, lo, hi, limit=400, epsabs=0.0, epsrel=1e-12)[0]
    return total ** (1.0 / p)


def q_eps(theta, eps):
    """``Q_eps(theta) = E[Var(Z|Y)^p]^(1/p)`` with ``p = (1 + eps) / eps``.

    Any angle is accepted; it is first reduced to ``[-pi/4, pi/4]``.
    """
    p = _hoelder_p(eps)
    t = reduce_theta(theta)
    if t < 0:
        return var_z_given_y(t, 0.0)
    if t == 0:
        return 1.0
    if abs(t - PI4) < PI4_BRANCH_TOL:
        return math.exp(log_moment_y_pi4(2 * p) / p) / 3.0
    return _q_pos_theta(t, eps)


def cvar_w_2d(W, eps):
    """``C_Var,W(eps, 2, 1)`` for an arbitrary orthogonal 2 x 2 ``W``.

    Only the active direction enters: negating the inactive column changes
    the sign of ``Z`` and leaves every conditional variance unchanged.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != (2, 2):
        raise InvalidInputError("W must be 2 x 2")
    theta = math.atan2(W[1, 0], W[0, 0])
    return q_eps(theta, eps)


def _check_nki(n, k, i=None):
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise InvalidInputError(f"n must be an integer >= 2, got {n}")
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n - 1):
        raise InvalidInputError(f"k must be in [1, {n - 1}], got {k}")
    if i is not None and not (isinstance(i, (int, np.integer)) and 1 <= i <= n - k):
        raise InvalidInputError(f"i must be in [1, {n - k}], got {i}")


def simplex_height(n, k, i, y1):
    """Height ``sqrt(n (k+i) / (k+i-1)) * y1`` bounding the ``i``-th inactive coordinate."""
    _check_nki(n, k, i)
    if not y1 > 0:
        raise InvalidInputError(f"y1 must be positive, got {y1}")
    return math.sqrt(n * (k + i) / (k + i - 1)) * y1


def simplex_volume(n, y1):
    """Volume ``sqrt(n)^n / (n-1)! * y1^(n-1)`` of the slice ``{x >= 0 : sum x = sqrt(n) y1}``."""
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise InvalidInputError(f"n must be an integer >= 2, got {n}")
    if not y1 > 0:
        raise InvalidInputError(f"y1 must be positive, got {y1}")
    return math.exp(0.5 * n * math.log(n) - math.lgamma(n) + (n - 1) * math.log(y1))


def _exp_checked(log_value, eps):
    if log_value > _LOG_MAX:
        raise GammaRangeError(f"value overflows double precision at eps={eps}", eps=eps)
    return math.exp(log_value)


def log_moment_bound_var_zi(n, k, i, eps):
    _check_nki(n, k, i)
    p = _hoelder_p(eps)
    return p * math.log((k + i) / (k + i - 1)) + math.lgamma(n + 2 + 2 / eps) - math.lgamma(n)


def moment_bound_var_zi(n, k, i, eps):
    """Upper bound ``((k+i)/(k+i-1))^p * Gamma(n+2+2/eps) / (n-1)!`` on ``E[Var(Z_i|Y)^p]``."""
    return _exp_checked(log_moment_bound_var_zi(n, k, i, eps), eps)


def log_c_eps(n, k, eps):
    _check_nki(n, k)
    p = _hoelder_p(eps)
    terms = [p * math.log((k + i) / (k + i - 1)) for i in range(1, n - k + 1)]
    log_sum = float(special.logsumexp(terms))
    inner = math.lgamma(n + 2 + 2 / eps) - math.lgamma(n) + log_sum
    return math.log(n - k) / (1 + eps) + inner / p


def c_eps(n, k, eps):
    """``C_eps(n, k)``, evaluated in log space."""
    return _exp_checked(log_c_eps(n, k, eps), eps)


def c_eps_direct(n, k, eps):
    """``C_eps(n, k)`` straight from Gamma and factorial; overflows early."""
    _check_nki(n, k)
    p = _hoelder_p(eps)
    try:
        g = math.gamma(n + 2 + 2 / eps) / math.factorial(n - 1)
    except OverflowError as exc:
        raise GammaRangeError(f"Gamma overflow at eps={eps}", eps=eps) from exc
    s = sum(((k + i) / (k + i - 1)) ** p for i in range(1, n - k + 1))
    return (n - k) ** (1 / (1 + eps)) * (g * s) ** (eps / (1 + eps))


def c_expn(n, k, eps, L):
    """``C_exp^n = K * L^(eps/(1+eps)) * C_eps(n, k)``."""
    if not L > 0:
        raise InvalidInputError(f"L must be positive, got {L}")
    log_val = math.log(K_BOBKOV) + eps / (1 + eps) * math.log(L) + log_c_eps(n, k, eps)
    return _exp_checked(log_val, eps)


def c_exp2d_pi4(eps, L):
    """Two-dimensional worst-case constant ``L^(eps/(1+eps)) * K * Q_eps(pi/4)``."""
    if not L > 0:
        raise InvalidInputError(f"L must be positive, got {L}")
    return L ** (eps / (1 + eps)) * K_BOBKOV * q_eps(PI4, eps)
