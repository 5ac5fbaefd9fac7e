import math

import numpy as np
import pytest
from scipy import stats

from asmbounds import exp_analysis, oracles
from asmbounds.distributions import (
    Gaussian,
    ProductExponential,
    UniformBox,
    conditional_sampler_exp2d,
    conditional_sampler_simplex,
    marginal_rho_y_pi4,
    simplex_rotation,
)
from asmbounds.errors import InvalidInputError, UnsupportedConditionalError
from asmbounds.linalg import rotation_2d, split
from asmbounds.rng import stream

PI4 = math.pi / 4


def test_densities():
    e = ProductExponential.unit(2)
    assert e.density([0.0, 0.0]) == 1.0
    assert e.density([-1.0, 0.0]) == 0.0
    assert Gaussian.standard(2).density([0.0, 0.0]) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    np.testing.assert_allclose(UniformBox([0, 0], [1, 2]).density([[0.5, 1.0], [2.0, 0.0]]), [0.5, 0.0])
    with pytest.raises(InvalidInputError):
        e.density([1.0, 2.0, 3.0])


def test_densities_integrate_to_one():
    e = ProductExponential([2.0])
    spec = oracles.QuadratureSpec(lambda x: e.density([x]), 0.0, math.inf, 1e-10, tail_rate=2.0)
    assert oracles.quad_1d(spec)[0] == pytest.approx(1.0, abs=1e-6)
    g = Gaussian([1.0], [[4.0]])
    spec = oracles.QuadratureSpec(lambda x: g.density([x - 30.0]), 0.0, 60.0, 1e-10)
    assert oracles.quad_1d(spec)[0] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("bad", [dict(rates=[1.0, 0.0]), dict(rates=[np.inf])])
def test_exponential_rejects_rates(bad):
    with pytest.raises(InvalidInputError):
        ProductExponential(**bad)


def test_gaussian_rejects_indefinite_covariance():
    with pytest.raises(InvalidInputError):
        Gaussian([0, 0], [[1.0, 2.0], [2.0, 1.0]])


def test_box_rejects_empty():
    with pytest.raises(InvalidInputError):
        UniformBox([0, 1], [1, 1])


def test_sample_moments():
    rng = stream(11)
    x = ProductExponential.unit(2).sample(rng, 100_000)
    np.testing.assert_allclose(x.mean(axis=0), [1.0, 1.0], atol=0.02)
    g = Gaussian.standard(2).sample(rng, 100_000)
    np.testing.assert_allclose(np.cov(g.T), np.eye(2), atol=0.03)
    b = UniformBox([0, 0], [1, 2]).sample(rng, 100_000)
    np.testing.assert_allclose(b.mean(axis=0), [0.5, 1.0], atol=0.02)


def test_sampling_is_deterministic():
    a = ProductExponential.unit(3).sample(stream(5), 10)
    b = ProductExponential.unit(3).sample(stream(5), 10)
    assert np.array_equal(a, b)


@pytest.mark.parametrize(
    "theta, y, var",
    [(PI4, 2.0, 4.0 / 3.0), (0.0, 1.0, 1.0), (-PI4, 1.0, 0.5)],
)
def test_exp2d_conditional_variance(theta, y, var):
    z = conditional_sampler_exp2d(theta, y).sample(stream(21), 100_000)[:, 0]
    assert np.var(z) == pytest.approx(var, rel=0.02)


def test_exp2d_pi4_routes_to_uniform():
    sl = conditional_sampler_exp2d(PI4 + 5e-10, 2.0)
    assert (sl.lo[0], sl.hi[0], sl.rate[0]) == (-2.0, 2.0, 0.0)


@pytest.mark.parametrize("theta", [-PI4, -0.5, 0.0, 0.3, PI4])
@pytest.mark.parametrize("y", [0.5, 1.0, 3.0])
def test_exp2d_conditional_ks(theta, y):
    sl = conditional_sampler_exp2d(theta, y)
    lo, hi = exp_analysis.support_bounds_2d(theta, y)
    assert sl.lo[0] == pytest.approx(lo, abs=1e-12)
    assert sl.hi[0] == pytest.approx(hi, abs=1e-12) or (math.isinf(hi) and math.isinf(sl.hi[0]))
    z = sl.sample(stream(100 + int(10 * y)), 100_000)[:, 0]
    assert stats.kstest(z, sl.cdf).statistic <= 0.01
    assert np.all((z >= lo) & (z <= hi))


def test_exp2d_conditional_outside_support():
    with pytest.raises(InvalidInputError):
        conditional_sampler_exp2d(0.3, -1.0)
    with pytest.raises(InvalidInputError):
        conditional_sampler_exp2d(PI4, 0.0)


def test_simplex_sampler_n2_is_uniform():
    z = conditional_sampler_simplex(2, 1, 1.0, stream(3), 100_000)[:, 0]
    assert np.var(z) == pytest.approx(1.0 / 3.0, rel=0.02)
    assert stats.kstest(z, stats.uniform(-1, 2).cdf).statistic <= 0.01


def test_simplex_sampler_heights():
    z = conditional_sampler_simplex(3, 1, 1.0, stream(4), 100_000)
    for i in (1, 2):
        assert np.max(np.abs(z[:, i - 1])) <= exp_analysis.simplex_height(3, 1, i, 1.0)


def test_simplex_sampler_mean_matches_rejection():
    rng = stream(5)
    z = conditional_sampler_simplex(3, 2, 1.0, rng, 100_000)
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=0.02)
    x, _ = oracles.rejection_sample_simplex(3, 1.0, rng, 20_000)
    zr = x @ simplex_rotation(3)[:, 1:]
    np.testing.assert_allclose(zr.mean(axis=0), z.mean(axis=0), atol=0.03)


@pytest.mark.parametrize("n", range(2, 7))
def test_simplex_sampler_support_and_sum(n):
    y1 = 0.7
    z = conditional_sampler_simplex(n, 1, y1, stream(n), 100_000)
    W = simplex_rotation(n)
    coords = np.column_stack([np.full(len(z), y1), z])
    x = coords @ W.T
    assert np.min(x) >= -1e-10
    assert np.max(np.abs(x.sum(axis=1) - math.sqrt(n) * y1)) <= 1e-10


def test_simplex_sampler_rejects():
    with pytest.raises(InvalidInputError):
        conditional_sampler_simplex(3, 1, 0.0, stream(0))
    with pytest.raises(InvalidInputError):
        conditional_sampler_simplex(3, 3, 1.0, stream(0))


def test_marginal_pi4():
    assert marginal_rho_y_pi4(0.0) == 0.0
    assert marginal_rho_y_pi4(-1.0) == 0.0
    assert marginal_rho_y_pi4(1.0) == pytest.approx(2 * math.exp(-math.sqrt(2)), rel=1e-15)
    assert marginal_rho_y_pi4(1.0) == pytest.approx(oracles.marginal_density_quad(PI4, 1.0), rel=1e-9)
    spec = oracles.QuadratureSpec(marginal_rho_y_pi4, 0.0, math.inf, 1e-11, tail_rate=1.0)
    assert oracles.quad_1d(spec)[0] == pytest.approx(1.0, abs=1e-8)


def test_gaussian_conditional_schur_complement():
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    g = Gaussian([1.0, -1.0], cov)
    sp = split(rotation_2d(0.4), np.zeros(2), 1)
    sl = g.conditional(sp, np.array([0.5]))
    w1, w2 = sp.W1[:, 0], sp.W2[:, 0]
    s11, s12, s22 = w1 @ cov @ w1, w1 @ cov @ w2, w2 @ cov @ w2
    assert sl.variance()[0] == pytest.approx(s22 - s12**2 / s11, rel=1e-12)
    expected_mean = w2 @ g.mean + s12 / s11 * (0.5 - w1 @ g.mean)
    z = sl.sample(stream(8), 100_000)[:, 0]
    assert z.mean() == pytest.approx(expected_mean, abs=0.02)


def test_isotropic_gaussian_conditional_is_independent_of_y():
    g = Gaussian.standard(3)
    sp = split(np.eye(3), np.zeros(3), 1)
    a = g.conditional(sp, np.array([5.0])).sample(stream(1), 4)
    b = g.conditional(sp, np.array([-5.0])).sample(stream(1), 4)
    assert np.array_equal(a, b)


def test_box_chord_conditional_is_uniform():
    box = UniformBox([0, 0], [1, 1])
    sp = split(rotation_2d(0.3), np.zeros(2), 1)
    sl = box.conditional(sp, np.array([0.6]))
    pts = sl.lift(sl.sample(stream(2), 20_000))
    assert np.all(pts >= -1e-12) and np.all(pts <= 1 + 1e-12)
    assert sl.variance() == pytest.approx(sl.width[0] ** 2 / 12, rel=1e-12)


def test_unsupported_conditionals():
    with pytest.raises(UnsupportedConditionalError):
        UniformBox(np.zeros(3), np.ones(3)).conditional(split(np.eye(3), np.zeros(3), 1), np.zeros(1))
    W = np.eye(3)
    with pytest.raises(UnsupportedConditionalError):
        ProductExponential.unit(3).conditional(split(W, np.zeros(3), 1), np.ones(1))


def test_batched_conditional_shapes():
    sp = split(rotation_2d(PI4), np.zeros(2), 1)
    sl = ProductExponential.unit(2).conditional(sp, np.array([[1.0], [2.0], [3.0]]))
    assert sl.sample(stream(0), 7).shape == (3, 7, 1)
    assert sl.lift(sl.sample(stream(0), 7)).shape == (3, 7, 2)
