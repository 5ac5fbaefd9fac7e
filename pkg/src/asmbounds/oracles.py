"""Independent numerical checks.

Nothing here reuses the closed forms it is meant to verify: supports are
clipped from the constraints ``x >= 0`` directly, densities come from the
joint law, and integrals use an adaptive Simpson rule.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError, InvalidInputError, NoConvergenceError


@dataclass
class QuadratureSpec:
    """A 1-D integral.

    ``upper`` may be ``inf``; the integral is then truncated once the
    integrand falls below ``1e-12`` of the running total times the decay
    length ``1 / tail_rate``, which bounds the remainder for integrands with
    an exponential tail of rate at least ``tail_rate`` (past their mode).
    Long finite ranges with a ``tail_rate`` are walked the same way.
    """

    integrand: Callable[[float], float]
    lower: float
    upper: float
    tol: float = 1e-10
    max_subdivisions: int = 200_000
    tail_rate: Optional[float] = None


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a, b, tol, max_subdivisions):
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson(f, a, fa, b, fb)
    stack = [(a, fa, m, fm, b, fb, whole, tol)]
    total = 0.0
    err = 0.0
    splits = 0
    while stack:
        a, fa, m, fm, b, fb, whole, tol_i = stack.pop()
        lm, flm, left = _simpson(f, a, fa, m, fm)
        rm, frm, right = _simpson(f, m, fm, b, fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol_i or (b - a) < 1e-14 * max(1.0, abs(a)):
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
            continue
        splits += 1
        if splits > max_subdivisions:
            raise NoConvergenceError("adaptive Simpson hit its subdivision cap", partial=total + whole)
        stack.append((a, fa, lm, flm, m, fm, left, 0.5 * tol_i))
        stack.append((m, fm, rm, frm, b, fb, right, 0.5 * tol_i))
    return total, err


def quad_1d(spec):
    """Integrate ``spec.integrand`` over ``[lower, upper]``.

    Returns
    -------
    value, error_estimate : float
    """
    f = spec.integrand

    def g(x):
        v = f(x)
        if not math.isfinite(v):
            raise EvaluationError(f"integrand is not finite at {x}", point=x)
        return v

    a, b = float(spec.lower), float(spec.upper)
    if math.isinf(a):
        raise InvalidInputError("lower limit must be finite")
    if b <= a:
        return 0.0, 0.0
    rate = spec.tail_rate if spec.tail_rate and spec.tail_rate > 0 else None
    if math.isinf(b) and rate is None:
        raise InvalidInputError("a semi-infinite integral needs a positive tail_rate")
    if rate is None or (b - a) * rate <= 8.0:
        return _adaptive_simpson(g, a, b, spec.tol, spec.max_subdivisions)
    # mass concentrated near the lower limit on the scale 1/rate: walk out in
    # doubling windows so the boundary layer is never stepped over
    length = 1.0 / rate
    value, err = 0.0, 0.0
    lo, width = a, 8.0 * length
    while True:
        hi = min(lo + width, b)
        v, e = _adaptive_simpson(g, lo, hi, spec.tol, spec.max_subdivisions)
        value += v
        err += e
        if hi == b:
            return value, err
        edge = abs(g(hi))
        if edge * length <= 1e-12 * max(abs(value), 1e-300) and abs(v) <= 1e-6 * max(abs(value), 1e-300):
            err += edge * length
            return value, err
        if hi - a > 1e6 * length:
            raise NoConvergenceError("tail did not decay", partial=value)
        lo, width = hi, 2.0 * width


def _chord_2d(theta, y):
    # z-interval where R_theta (y, z) >= 0, from the two half-plane constraints
    c, s = math.cos(theta), math.sin(theta)
    lo, hi = -math.inf, math.inf
    for base, w in ((c * y, -s), (s * y, c)):  # x1 = c y - s z, x2 = s y + c z
        if w == 0.0:
            if base < 0:
                return math.nan, math.nan
            continue
        bound = -base / w
        if w > 0:
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    return lo, hi


def _chord_law(theta, y):
    # Along the chord the joint density is exp(-x1 - x2) = C * exp(-rate * z).
    # Parametrize by u = distance from the heavier endpoint, u in [0, width].
    lo, hi = _chord_2d(theta, y)
    if not hi > lo:
        raise InvalidInputError(f"y={y} outside the support of Y for theta={theta}")
    c, s = math.cos(theta), math.sin(theta)
    rate = c - s
    if rate >= 0:
        anchor, sign = lo, 1.0
    else:
        anchor, sign = hi, -1.0
    if math.isinf(anchor):
        raise InvalidInputError("conditional law is not normalizable")
    width = hi - lo
    scale = math.exp(-(c + s) * y - rate * anchor)
    return anchor, sign, abs(rate), width, scale


def _u_spec(integrand, a, b, rate, tol):
    return QuadratureSpec(integrand, a, b, tol, tail_rate=rate if rate > 0 else None)


def _conditional_moments(theta, y, tol):
    anchor, sign, r, width, scale = _chord_law(theta, y)

    def dens(u):
        return math.exp(-r * u)

    mass = quad_1d(_u_spec(dens, 0.0, width, r, tol))[0]
    mu = quad_1d(_u_spec(lambda u: u * dens(u), 0.0, width, r, tol))[0] / mass
    var = quad_1d(_u_spec(lambda u: (u - mu) ** 2 * dens(u), 0.0, width, r, tol))[0] / mass
    return mass * scale, anchor + sign * mu, var, (anchor, sign, r, width, mu)


def conditional_variance_quad(theta, y, tol=1e-10):
    """``Var(Z | Y = y)`` for the unit-rate 2-D exponential under ``R_theta``, by quadrature."""
    return _conditional_moments(float(theta), float(y), tol)[2]


def marginal_density_quad(theta, y, tol=1e-10):
    """``rho_Y(y)`` by integrating the joint density along the chord."""
    try:
        return _conditional_moments(float(theta), float(y), tol)[0]
    except InvalidInputError:
        return 0.0


def abs_deviation_variance_quad(theta, y, tol=1e-10):
    """``Var(|Z - E[Z|y]| | Y = y)``, the lower end of the Bobkov sandwich."""
    _, _, _, (_, _, r, width, mu) = _conditional_moments(float(theta), float(y), tol)

    def dens(u):
        return math.exp(-r * u)

    mass = m1 = m2 = 0.0
    for a, b in ((0.0, mu), (mu, width)):
        mass += quad_1d(_u_spec(dens, a, b, r, tol))[0]
        m1 += quad_1d(_u_spec(lambda u: abs(u - mu) * dens(u), a, b, r, tol))[0]
        m2 += quad_1d(_u_spec(lambda u: (u - mu) ** 2 * dens(u), a, b, r, tol))[0]
    m1 /= mass
    return m2 / mass - m1 * m1


def cvar_quad(theta, eps, tol=1e-9):
    """``E[Var(Z|Y)^p]^(1/p)`` for an arbitrary angle by nested quadrature.

    The outer integral runs over the support of ``Y`` with ``rho_Y`` itself
    obtained by quadrature.  Slow; meant for spot checks.
    """
    theta = float(theta)
    p = (1.0 + eps) / eps
    c, s = math.cos(theta), math.sin(theta)

    def integrand(y):
        try:
            mass, _, var, _ = _conditional_moments(theta, y, tol)
        except InvalidInputError:
            return 0.0
        return mass * var**p

    total = 0.0
    # Y decays like exp(-y / max(c, s)) on y > 0 and like exp(y / max(-c, -s)) on y < 0
    for sign in (1.0, -1.0):
        slope = max(sign * c, sign * s)
        if slope <= 1e-15:
            continue
        h = (lambda y, sg=sign: integrand(sg * y))
        total += quad_1d(QuadratureSpec(h, 0.0, math.inf, tol, tail_rate=1.0 / slope))[0]
    return total ** (1.0 / p)


def mse_quad_2d(f, theta, k=1, tol=1e-6):
    """``E[(f(X) - E[f(X) | Y])^2]`` for the unit-rate 2-D exponential under ``R_theta``.

    ``f`` maps a point ``(x1, x2)`` (array of shape (2,)) to a float.
    """
    if k != 1:
        raise InvalidInputError("only k = 1 exists in two dimensions")
    theta = float(theta)
    c, s = math.cos(theta), math.sin(theta)
    inner_tol = tol * 1e-3

    def lift(y, z):
        return np.array([c * y - s * z, s * y + c * z])

    def outer(y):
        try:
            anchor, sign, r, width, scale = _chord_law(theta, y)
        except InvalidInputError:
            return 0.0

        def dens(u):
            return scale * math.exp(-r * u)

        def fz(u):
            return f(lift(y, anchor + sign * u))

        joint = quad_1d(_u_spec(dens, 0.0, width, r, inner_tol))[0]
        if joint == 0.0:
            return 0.0
        g = quad_1d(_u_spec(lambda u: fz(u) * dens(u), 0.0, width, r, inner_tol))[0] / joint
        return quad_1d(_u_spec(lambda u: (fz(u) - g) ** 2 * dens(u), 0.0, width, r, inner_tol))[0]

    total = 0.0
    for sign in (1.0, -1.0):
        slope = max(sign * c, sign * s)
        if slope <= 1e-15:
            continue
        total += quad_1d(QuadratureSpec(lambda y, sg=sign: outer(sg * y), 0.0, math.inf, tol, tail_rate=1.0 / slope))[0]
    return total


def rejection_sample_simplex(n, y1, rng, count=1, max_trials=10_000_000):
    """Uniform points on ``{x >= 0 : sum x = sqrt(n) y1}`` by rejection.

    The first ``n - 1`` coordinates are drawn uniformly in the bounding box
    ``[0, sqrt(n) y1]^(n-1)`` and kept when their sum does not exceed
    ``sqrt(n) y1``.

    Returns
    -------
    points : ndarray (count, n)
    acceptance_rate : float
    """
    if n not in (2, 3, 4):
        raise InvalidInputError("rejection oracle limited to n in {2, 3, 4}")
    if not y1 > 0:
        raise InvalidInputError("y1 must be positive")
    a = math.sqrt(n) * y1
    kept, trials = [], 0
    have = 0
    batch = max(1024, 4 * count)
    while have < count:
        u = a * rng.random((batch, n - 1))
        ok = u.sum(axis=1) <= a
        trials += batch
        kept.append(u[ok])
        have += int(ok.sum())
        if trials >= 10_000 and have / trials < 1e-4:
            raise NoConvergenceError(f"acceptance rate {have / trials:.2e} below 1e-4", partial=have)
        if trials > max_trials:
            raise NoConvergenceError("too many rejection trials", partial=have)
    head = np.concatenate(kept)[:count]
    pts = np.column_stack([head, a - head.sum(axis=1)])
    return pts, have / trials


def simplex_volume_mc(n, y1, acceptance_rate):
    """Slice volume implied by a rejection acceptance rate.

    Box volume ``(sqrt(n) y1)^(n-1)`` times the rate, times ``sqrt(n)`` for the
    tilt of the hyperplane ``sum x = const`` against the coordinate plane.
    """
    return acceptance_rate * (math.sqrt(n) * y1) ** (n - 1) * math.sqrt(n)


def finite_diff_grad(f, x, h_rel=1e-5, lower=None, upper=None):
    """Central-difference gradient with per-coordinate step ``h_rel * (1 + |x_i|)``.

    Where a central step would leave ``[lower, upper]`` a one-sided
    difference into the box is used instead.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)

    def ev(p):
        v = float(f(p))
        if not math.isfinite(v):
            raise EvaluationError(f"f is not finite at {p}", point=p)
        return v

    g = np.empty(n)
    f0 = None
    for i in range(n):
        h = h_rel * (1.0 + abs(x[i]))
        e = np.zeros(n)
        e[i] = h
        if x[i] - h >= lower[i] and x[i] + h <= upper[i]:
            g[i] = (ev(x + e) - ev(x - e)) / (2 * h)
        else:
            f0 = ev(x) if f0 is None else f0
            if x[i] + 2 * h <= upper[i]:
                g[i] = (-3 * f0 + 4 * ev(x + e) - ev(x + 2 * e)) / (2 * h)
            else:
                g[i] = (3 * f0 - 4 * ev(x - e) + ev(x - 2 * e)) / (2 * h)
    return g


def energy_test(a, b, rng, permutations=200):
    """Two-sample energy-distance permutation test; returns ``(statistic, p_value)``."""
    a = np.asarray(a, dtype=float).reshape(len(a), -1)
    b = np.asarray(b, dtype=float).reshape(len(b), -1)
    pooled = np.vstack([a, b])
    sq = np.sum(pooled * pooled, axis=1)
    D = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * pooled @ pooled.T, 0.0))
    na, nb = len(a), len(b)

    def stat(mask):
        ia = mask.astype(float)
        ib = 1.0 - ia
        dab = ia @ D @ ib / (na * nb)
        daa = ia @ D @ ia / (na * na)
        dbb = ib @ D @ ib / (nb * nb)
        return 2 * dab - daa - dbb

    mask = np.zeros(na + nb, dtype=bool)
    mask[:na] = True
    observed = stat(mask)
    hits = 0
    for _ in range(permutations):
        hits += stat(rng.permutation(mask)) >= observed
    return observed, (hits + 1) / (permutations + 1)


def poincare_gap_mc(value, gradient, dist, constant, count, rng):
    """Monte Carlo check of ``Var(f) <= constant * E|grad f|^2``.

    Returns ``(variance, rhs, stderr)`` where ``stderr`` combines the
    standard errors of both sides.
    """
    x = dist.sample(rng, count)
    fx = np.asarray(value(x), dtype=float)
    g2 = np.sum(np.asarray(gradient(x), dtype=float) ** 2, axis=1)
    dev = (fx - fx.mean()) ** 2
    var = dev.mean() * count / (count - 1)
    rhs = constant * g2.mean()
    se = math.sqrt(dev.var(ddof=1) / count + constant**2 * g2.var(ddof=1) / count)
    return var, rhs, se
