import math

import numpy as np
import pytest
from scipy import integrate

from app.core.exceptions import InvalidInput, OutsideSupport
from app.models.shape import ShapeDistribution, ShapeKind
from app.services.shape_service import shape_service


@pytest.fixture
def gaussian_1d():
    return shape_service.make_shape(ShapeKind.GAUSSIAN, 1)


@pytest.fixture
def student_1d():
    return shape_service.make_shape(ShapeKind.STUDENT_T, 1, nu=5)


def all_shapes(d):
    return [
        shape_service.make_shape(ShapeKind.GAUSSIAN, d),
        shape_service.make_shape(ShapeKind.UNIFORM_BALL, d),
        shape_service.make_shape(ShapeKind.STUDENT_T, d, nu=5),
    ]


def test_gaussian_kernel_ratio(gaussian_1d):
    ratio = math.exp(shape_service.log_radial(gaussian_1d, 1.0) - shape_service.log_radial(gaussian_1d, 0.0))
    assert ratio == pytest.approx(math.exp(-0.5))
    assert shape_service.log_density(gaussian_1d, [0.0]) == pytest.approx(-0.5 * math.log(2 * math.pi))


def test_uniform_ball_radius():
    shape = shape_service.make_shape("uniform-ball", 2)
    assert shape.support_radius == pytest.approx(2.0)
    assert not shape.is_smooth


def test_student_t_requires_nu():
    with pytest.raises(InvalidInput):
        shape_service.make_shape(ShapeKind.STUDENT_T, 2)
    with pytest.raises(InvalidInput):
        shape_service.make_shape(ShapeKind.STUDENT_T, 2, nu=2.0)


def test_unknown_kind():
    with pytest.raises(InvalidInput):
        shape_service.make_shape("laplace", 1)


@pytest.mark.parametrize("shape", all_shapes(1), ids=lambda s: s.label)
def test_density_1d_is_standardized(shape):
    limit = shape.support_radius if math.isfinite(shape.support_radius) else np.inf
    f = lambda z: float(shape_service.density_1d(shape, z))
    mass, _ = integrate.quad(f, -limit, limit)
    mean, _ = integrate.quad(lambda z: z * f(z), -limit, limit)
    second, _ = integrate.quad(lambda z: z * z * f(z), -limit, limit)
    assert mass == pytest.approx(1.0, abs=1e-7)
    assert mean == pytest.approx(0.0, abs=1e-7)
    assert second == pytest.approx(1.0, abs=1e-6)


def test_radial_log_deriv_examples(gaussian_1d):
    assert shape_service.radial_log_deriv(gaussian_1d, 2.0) == pytest.approx(-2.0)
    ball = shape_service.make_shape(ShapeKind.UNIFORM_BALL, 2)
    assert shape_service.radial_log_deriv(ball, 1.0) == 0.0
    with pytest.raises(OutsideSupport):
        shape_service.radial_log_deriv(ball, 2.0)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_student_t_radial_log_deriv_finite_difference(r):
    shape = shape_service.make_shape(ShapeKind.STUDENT_T, 3, nu=5)
    h = 1e-5
    numeric = (shape_service.log_radial(shape, r + h) - shape_service.log_radial(shape, r - h)) / (2 * h)
    assert shape_service.radial_log_deriv(shape, r) == pytest.approx(numeric, abs=1e-6)


def test_ratio_finite_at_origin(student_1d):
    assert shape_service.radial_log_deriv_ratio(student_1d, 0.0) == pytest.approx(-6.0 / 3.0)


def test_sample_standard_deterministic():
    shape = shape_service.make_shape(ShapeKind.STUDENT_T, 2, nu=5)
    first = shape_service.sample_standard(shape, 100, seed=11)
    second = shape_service.sample_standard(shape, 100, seed=11)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, shape_service.sample_standard(shape, 100, seed=11, stream_index=1))


def test_gaussian_sample_moments(gaussian_1d):
    n = 1_000_000
    z = shape_service.sample_standard(gaussian_1d, n, seed=3)[:, 0]
    assert abs(z.mean()) <= 4 / math.sqrt(n)
    assert abs(z.var() - 1) <= 4 * math.sqrt(2 / n)


def test_uniform_ball_support():
    shape = shape_service.make_shape(ShapeKind.UNIFORM_BALL, 2)
    z = shape_service.sample_standard(shape, 10_000, seed=5)
    assert np.linalg.norm(z, axis=1).max() <= 2.0


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_verify_standardization_passes(d):
    for shape in all_shapes(d):
        report = shape_service.verify_standardization(shape, 100_000, seed=d)
        assert report.passed, report
        assert report.dim == d


def test_verify_standardization_detects_wrong_radius():
    d = 3
    adversarial = ShapeDistribution(ShapeKind.UNIFORM_BALL, d, log_normalizer=0.0, support_radius=math.sqrt(d))
    report = shape_service.verify_standardization(adversarial, 100_000, seed=1)
    assert not report.passed
    assert report.max_cov_dev == pytest.approx(1 - d / (d + 2), abs=0.02)


def test_verify_standardization_needs_large_n(gaussian_1d):
    with pytest.raises(InvalidInput):
        shape_service.verify_standardization(gaussian_1d, 1000, seed=0)


@pytest.mark.parametrize("shape", all_shapes(1), ids=lambda s: s.label)
def test_cdf_and_quantile(shape):
    assert shape_service.cdf_1d(shape, 0.0) == pytest.approx(0.5)
    levels = np.array([0.01, 0.25, 0.5, 0.9])
    points = shape_service.quantile_1d(shape, levels)
    np.testing.assert_allclose(shape_service.cdf_1d(shape, points), levels, atol=1e-12)


@pytest.mark.parametrize("shape", all_shapes(1), ids=lambda s: s.label)
def test_tail_first_moment_matches_quadrature(shape):
    upper = shape.support_radius if math.isfinite(shape.support_radius) else np.inf
    for a in (-1.0, 0.0, 0.5):
        expected, _ = integrate.quad(lambda z: z * float(shape_service.density_1d(shape, z)), a, upper)
        assert shape_service.tail_first_moment_1d(shape, a) == pytest.approx(expected, abs=1e-8)
    assert shape_service.tail_first_moment_1d(shape, np.inf) == 0.0


def test_gaussian_tail_moment_at_zero(gaussian_1d):
    assert shape_service.tail_first_moment_1d(gaussian_1d, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_one_dimensional_helpers_reject_higher_dims():
    with pytest.raises(InvalidInput):
        shape_service.cdf_1d(shape_service.make_shape(ShapeKind.GAUSSIAN, 2), 0.0)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_log_density_is_rotation_invariant(d):
    rng = np.random.default_rng(d)
    for shape in all_shapes(d):
        z = rng.standard_normal((50, d))
        # keep points inside the uniform ball
        z *= 0.5 / np.max(np.linalg.norm(z, axis=1))
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        q = q * np.sign(np.diag(r))
        np.testing.assert_allclose(
            shape_service.log_density(shape, z @ q.T), shape_service.log_density(shape, z), rtol=1e-12, atol=1e-12
        )
        signs = rng.choice([-1.0, 1.0], size=d)
        assert np.array_equal(shape_service.log_density(shape, z * signs), shape_service.log_density(shape, z))
