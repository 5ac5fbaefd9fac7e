import math

import numpy as np
import pytest
from scipy import stats

from asmbounds import oracles
from asmbounds.distributions import conditional_sampler_simplex, simplex_rotation
from asmbounds.errors import EvaluationError, InvalidInputError, NoConvergenceError
from asmbounds.oracles import QuadratureSpec, quad_1d
from asmbounds.rng import stream

PI4 = math.pi / 4

CORPUS = [
    (QuadratureSpec(lambda x: math.exp(-x), 0.0, 40.0, 1e-10), 1.0 - math.exp(-40.0), 1e-10),
    (QuadratureSpec(lambda x: math.exp(-x), 0.0, math.inf, 1e-10, tail_rate=1.0), 1.0, 1e-10),
    (QuadratureSpec(lambda y: 2 * y * math.exp(-math.sqrt(2) * y), 0.0, math.inf, 1e-10, tail_rate=1.0), 1.0, 1e-8),
    (QuadratureSpec(math.sin, 0.0, math.pi, 1e-10), 2.0, 1e-10),
    (QuadratureSpec(lambda x: x**4, -1.0, 2.0, 1e-10), 33 / 5, 1e-10),
    (QuadratureSpec(lambda x: math.sqrt(x), 0.0, 1.0, 1e-10), 2 / 3, 1e-8),
]


@pytest.mark.parametrize("spec, truth, tol", CORPUS)
def test_quad_corpus(spec, truth, tol):
    value, err = quad_1d(spec)
    assert abs(value - truth) <= tol
    assert abs(value - truth) <= max(err, 1e-15)


def test_quad_reports_partial_on_cap():
    spec = QuadratureSpec(lambda x: math.sin(1 / x) if x else 0.0, 0.0, 1.0, 1e-14, max_subdivisions=50)
    with pytest.raises(NoConvergenceError) as info:
        quad_1d(spec)
    assert info.value.partial is not None


def test_quad_input_errors():
    with pytest.raises(InvalidInputError):
        quad_1d(QuadratureSpec(math.exp, -math.inf, 0.0))
    with pytest.raises(InvalidInputError):
        quad_1d(QuadratureSpec(math.exp, 0.0, math.inf))
    with pytest.raises(EvaluationError):
        quad_1d(QuadratureSpec(lambda x: math.inf if x == 0 else 1 / x, 0.0, 1.0))


def test_long_finite_range_boundary_layer():
    # mass within ~1e-3 of the left end of a range of length 1e3
    spec = QuadratureSpec(lambda u: math.exp(-1e3 * u), 0.0, 1e3, 1e-12, tail_rate=1e3)
    assert quad_1d(spec)[0] == pytest.approx(1e-3, rel=1e-9)


@pytest.mark.parametrize(
    "theta, y, expected, tol", [(PI4, 1.0, 1 / 3, 1e-10), (-PI4, 2.0, 0.5, 1e-8), (0.0, 5.0, 1.0, 1e-8)]
)
def test_conditional_variance_quad(theta, y, expected, tol):
    assert oracles.conditional_variance_quad(theta, y) == pytest.approx(expected, abs=tol)


def test_mse_quad_2d():
    c = s = math.sqrt(0.5)
    assert oracles.mse_quad_2d(lambda x: math.tanh(c * x[0] + s * x[1]), PI4) == pytest.approx(0.0, abs=1e-8)
    assert oracles.mse_quad_2d(lambda x: -s * x[0] + c * x[1], PI4) == pytest.approx(1.0, abs=1e-6)
    assert oracles.mse_quad_2d(lambda x: (-s * x[0] + c * x[1]) ** 2, PI4) == pytest.approx(8 / 3, abs=1e-6)


def test_mse_quad_2d_rejects_k():
    with pytest.raises(InvalidInputError):
        oracles.mse_quad_2d(lambda x: x[0], PI4, k=2)


def test_rejection_n2_uniform():
    x, _ = oracles.rejection_sample_simplex(2, 1.0, stream(1), 10_000)
    z = (x[:, 1] - x[:, 0]) / math.sqrt(2)
    assert stats.kstest(z, stats.uniform(-1, 2).cdf).statistic <= 0.02


def test_rejection_n3_matches_dirichlet():
    rng = stream(2)
    x, _ = oracles.rejection_sample_simplex(3, 1.0, rng, 10_000)
    z = conditional_sampler_simplex(3, 1, 1.0, rng, 10_000)
    xd = np.column_stack([np.ones(len(z)), z]) @ simplex_rotation(3).T
    assert stats.ks_2samp(x[:, 0], xd[:, 0]).statistic <= 0.02


def test_energy_test_rejection_vs_dirichlet():
    rng = stream(3)
    x, _ = oracles.rejection_sample_simplex(4, 1.0, rng, 1500)
    z = conditional_sampler_simplex(4, 1, 1.0, rng, 1500)
    xd = np.column_stack([np.ones(len(z)), z]) @ simplex_rotation(4).T
    _, p = oracles.energy_test(x, xd, rng, permutations=200)
    assert p > 0.01


def test_energy_test_detects_difference():
    rng = stream(4)
    a = rng.standard_normal((500, 2))
    b = rng.standard_normal((500, 2)) + 0.3
    _, p = oracles.energy_test(a, b, rng, permutations=200)
    assert p <= 0.01


def test_rejection_limits():
    with pytest.raises(InvalidInputError):
        oracles.rejection_sample_simplex(5, 1.0, stream(0))
    with pytest.raises(InvalidInputError):
        oracles.rejection_sample_simplex(3, 0.0, stream(0))


def test_finite_diff_grad():
    np.testing.assert_allclose(
        oracles.finite_diff_grad(lambda x: x @ x, np.array([1.0, 2.0])), [2.0, 4.0], atol=1e-6
    )
    np.testing.assert_allclose(
        oracles.finite_diff_grad(lambda x: math.sin(x[0]), np.zeros(3)), [1.0, 0.0, 0.0], atol=1e-8
    )
    rng = np.random.default_rng(5)
    B = rng.standard_normal((4, 4))
    A = B + B.T
    for _ in range(20):
        x = rng.standard_normal(4)
        g = oracles.finite_diff_grad(lambda v: v @ A @ v, x)
        np.testing.assert_allclose(g, 2 * A @ x, rtol=1e-5, atol=1e-8)


def test_finite_diff_one_sided_at_boundary():
    f = lambda x: math.sqrt(x[0]) + x[1] ** 2 if x[0] >= 0 else math.nan  # noqa: E731
    g = oracles.finite_diff_grad(f, np.array([0.25, 1.0]), lower=np.array([0.25, -np.inf]))
    np.testing.assert_allclose(g, [1.0, 2.0], rtol=1e-6)
    with pytest.raises(EvaluationError):
        oracles.finite_diff_grad(f, np.array([0.0, 1.0]))
