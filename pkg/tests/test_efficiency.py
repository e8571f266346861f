import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import DegenerateEstimate, InvalidInput, UnsupportedShape
from app.models.shape import ShapeKind
from app.schemas.reports import BoundCheck
from app.services.efficiency_service import efficiency_service
from app.services.model_service import model_service
from app.services.shape_service import shape_service
from app.services.wscore_service import wscore_service


@pytest.fixture
def gaussian_1d():
    return shape_service.make_shape(ShapeKind.GAUSSIAN, 1)


@pytest.fixture
def unit_theta():
    """θ = (0, 1) in one dimension."""
    return model_service.identity_theta(1)


def test_w_covariance_linear_is_exact(gaussian_1d, unit_theta):
    stat = efficiency_service.make_statistic("linear", unit_theta)
    np.testing.assert_allclose(efficiency_service.w_covariance(stat, unit_theta, gaussian_1d, 1000, seed=1), [[1.0]])


def test_w_covariance_square(gaussian_1d, unit_theta):
    stat = efficiency_service.make_statistic("square", unit_theta)
    value, se = efficiency_service.w_covariance(stat, unit_theta, gaussian_1d, 100_000, seed=2, with_std_error=True)
    assert abs(value[0, 0] - 4.0) <= 5 * se[0, 0]


def test_w_covariance_of_wscores_is_w_information(gaussian_1d, unit_theta):
    stat = efficiency_service.make_statistic("wscores", unit_theta)
    value, se = efficiency_service.w_covariance(stat, unit_theta, gaussian_1d, 100_000, seed=3, with_std_error=True)
    expected = wscore_service.w_info_matrix(unit_theta)
    assert np.all(np.abs(value - expected) <= 5 * se + 1e-12)
    assert np.all(np.linalg.eigvalsh(value) >= 0)


def test_w_covariance_needs_samples(gaussian_1d, unit_theta):
    with pytest.raises(InvalidInput):
        efficiency_service.w_covariance(efficiency_service.make_statistic("linear", unit_theta), unit_theta, gaussian_1d, 10, seed=0)


def test_unknown_statistic(unit_theta):
    with pytest.raises(InvalidInput):
        efficiency_service.make_statistic("median", unit_theta)


def test_fisher_information_gaussian_scalar(unit_theta):
    np.testing.assert_allclose(efficiency_service.fisher_information_gaussian(unit_theta), np.diag([1.0, 2.0]))


def test_fisher_info_mc_matches_gaussian_closed_form():
    shape = shape_service.make_shape(ShapeKind.GAUSSIAN, 2)
    theta = model_service.random_theta(2, seed=4)
    mc = efficiency_service.fisher_info_mc(theta, shape, 200_000, seed=4)
    closed = efficiency_service.fisher_information_gaussian(theta)
    np.testing.assert_allclose(mc, closed, atol=0.05 * np.abs(closed).max())


def test_fisher_info_mc_student_t_blocks():
    shape = shape_service.make_shape(ShapeKind.STUDENT_T, 1, nu=5)
    info = efficiency_service.fisher_info_mc(model_service.identity_theta(1), shape, 200_000, seed=5)
    assert np.all(np.linalg.eigvalsh(info) > 0)
    assert abs(info[0, 1]) < 0.05
    # location information of the standardized t₅ is (ν+1)/(ν+3) · ν/(ν−2) = 1.25
    assert info[0, 0] == pytest.approx(1.25, rel=0.03)


def test_fisher_info_rejects_uniform_ball(unit_theta):
    with pytest.raises(UnsupportedShape):
        efficiency_service.fisher_info_mc(unit_theta, shape_service.make_shape(ShapeKind.UNIFORM_BALL, 1), 1000, seed=0)


def test_wcr_linear_attains_bound(gaussian_1d, unit_theta):
    check = efficiency_service.wcr_bound_check(
        efficiency_service.make_statistic("linear", unit_theta), unit_theta, gaussian_1d, 100_000, seed=6
    )
    assert check.lhs[0][0] == pytest.approx(1.0)
    assert check.jacobian[0][0] == pytest.approx(1.0)
    assert abs(check.min_eig_gap) < 1e-3
    assert check.passed


def test_wcr_scaled_linear(gaussian_1d, unit_theta):
    check = efficiency_service.wcr_bound_check(
        efficiency_service.make_statistic("scaled_linear", unit_theta), unit_theta, gaussian_1d, 100_000, seed=7
    )
    assert check.lhs[0][0] == pytest.approx(4.0)
    assert check.rhs[0][0] == pytest.approx(4.0, abs=1e-3)
    assert check.passed


def test_wcr_cube_is_strict(gaussian_1d, unit_theta):
    check = efficiency_service.wcr_bound_check(
        efficiency_service.make_statistic("cube", unit_theta), unit_theta, gaussian_1d, 200_000, seed=8
    )
    assert check.lhs[0][0] == pytest.approx(27.0, rel=0.05)
    assert check.jacobian[0][0] == pytest.approx(3.0, rel=0.02)
    assert check.rhs[0][0] == pytest.approx(9.0, rel=0.05)
    assert check.min_eig_gap > 10.0
    assert check.passed


@pytest.mark.parametrize("kind", [ShapeKind.GAUSSIAN, ShapeKind.STUDENT_T, ShapeKind.UNIFORM_BALL])
def test_wcr_holds_for_random_theta(kind):
    shape = shape_service.make_shape(kind, 2, nu=5 if kind is ShapeKind.STUDENT_T else None)
    for k in range(3):
        theta = model_service.random_theta(2, seed=9, stream_index=k)
        for name in ("square", "cube", "wscores"):
            check = efficiency_service.wcr_bound_check(
                efficiency_service.make_statistic(name, theta), theta, shape, 20_000, seed=k
            )
            assert check.passed, (kind, k, name, check.min_eig_gap, check.gap_std_error)


@pytest.mark.parametrize("d", [1, 2])
def test_wcr_statistic_menu_on_ten_random_theta(d):
    shape = shape_service.make_shape(ShapeKind.GAUSSIAN, d)
    for k in range(10):
        theta = model_service.random_theta(d, seed=30, stream_index=k)
        for name in ("linear", "scaled_linear", "square", "cube", "wscores"):
            check = efficiency_service.wcr_bound_check(
                efficiency_service.make_statistic(name, theta), theta, shape, 20_000, seed=k
            )
            assert check.passed, (d, k, name, check.min_eig_gap, check.gap_std_error)
            if name == "linear":
                assert abs(check.min_eig_gap) <= 5 * check.gap_std_error + 1e-9


def test_wcr_finite_difference_jacobian(gaussian_1d, unit_theta):
    check = efficiency_service.wcr_bound_check(
        efficiency_service.make_statistic("linear", unit_theta), unit_theta, gaussian_1d, 10_000, seed=10, fd_check=True
    )
    assert check.fd_jacobian_max_dev < 1e-6


def test_bound_check_requires_symmetric_sides():
    with pytest.raises(ValidationError):
        BoundCheck(
            statistic="x", lhs=[[1.0, 2.0], [0.0, 1.0]], rhs=[[1.0, 0.0], [0.0, 1.0]],
            jacobian=[[1.0, 0.0], [0.0, 1.0]], min_eig_gap=0.0, gap_std_error=0.0,
        )


def test_noise_robustness_linear(gaussian_1d, unit_theta):
    report = efficiency_service.noise_robustness(
        efficiency_service.make_statistic("linear", unit_theta), unit_theta, gaussian_1d, [1e-3, 2e-3, 4e-3], 100_000, seed=11
    )
    assert report.slope[0][0] == pytest.approx(1.0, abs=0.03)
    assert report.correction[0][0] == pytest.approx(0.0, abs=1e-12)
    assert report.z_scores.max() <= 5.0


def test_noise_robustness_square(gaussian_1d, unit_theta):
    report = efficiency_service.noise_robustness(
        efficiency_service.make_statistic("square", unit_theta), unit_theta, gaussian_1d, [1e-3, 2e-3, 4e-3], 100_000, seed=12
    )
    assert report.slope[0][0] == pytest.approx(4.0, rel=0.05)
    assert report.correction[0][0] == pytest.approx(0.0, abs=1e-12)
    assert report.z_scores.max() <= 5.0


def test_noise_robustness_cube(gaussian_1d, unit_theta):
    report = efficiency_service.noise_robustness(
        efficiency_service.make_statistic("cube", unit_theta), unit_theta, gaussian_1d, [1e-3, 2e-3, 4e-3], 200_000, seed=13
    )
    assert report.slope[0][0] == pytest.approx(45.0, rel=0.05)
    assert report.correction[0][0] == pytest.approx(18.0, rel=0.1)
    assert report.var_w[0][0] == pytest.approx(27.0, rel=0.05)
    assert report.z_scores.max() <= 5.0


def test_noise_robustness_validates_grid(gaussian_1d, unit_theta):
    stat = efficiency_service.make_statistic("linear", unit_theta)
    with pytest.raises(InvalidInput):
        efficiency_service.noise_robustness(stat, unit_theta, gaussian_1d, [1e-3, 2e-3], 10_000, seed=0)
    with pytest.raises(InvalidInput):
        efficiency_service.noise_robustness(stat, unit_theta, gaussian_1d, [1e-3, 2e-3, 0.5], 10_000, seed=0)


def test_sampling_covariance_gaussian(gaussian_1d, unit_theta):
    n = 1000
    report = efficiency_service.estimator_sampling_covariance("w", unit_theta, gaussian_1d, n, 500, seed=14)
    assert report.failed == 0
    assert report.covariance[0][0] == pytest.approx(1 / n, rel=0.2)
    assert report.fisher_bound[0][0] == pytest.approx(1 / n)
    assert report.fisher_bound[1][1] == pytest.approx(0.5 / n)


def test_sampling_covariance_scales_with_n(gaussian_1d, unit_theta):
    small = efficiency_service.estimator_sampling_covariance("w", unit_theta, gaussian_1d, 250, 400, seed=15)
    large = efficiency_service.estimator_sampling_covariance("w", unit_theta, gaussian_1d, 500, 400, seed=15)
    ratio = small.covariance[0][0] / large.covariance[0][0]
    assert ratio == pytest.approx(2.0, rel=0.35)


def test_student_t_efficiency_loss(unit_theta):
    n = 500
    shape = shape_service.make_shape(ShapeKind.STUDENT_T, 1, nu=5)
    reports = efficiency_service.efficiency_comparison(["w"], unit_theta, shape, n, 300, seed=16)
    report = reports[0]
    assert report.covariance[0][0] == pytest.approx(1 / n, rel=0.25)
    assert report.fisher_bound[0][0] < 0.9 / n


def test_sampling_covariance_all_replications_failing():
    """n = 1 < d leaves every sample covariance singular."""
    shape = shape_service.make_shape(ShapeKind.GAUSSIAN, 2)
    with pytest.raises(DegenerateEstimate):
        efficiency_service.estimator_sampling_covariance("w", model_service.identity_theta(2), shape, 1, 100, seed=17)


def test_sampling_covariance_rejects_unrunnable_method_up_front(unit_theta):
    ball = shape_service.make_shape(ShapeKind.UNIFORM_BALL, 1)
    with pytest.raises(UnsupportedShape):
        efficiency_service.estimator_sampling_covariance("mle", unit_theta, ball, 50, 100, seed=17)
    gaussian_2d = shape_service.make_shape(ShapeKind.GAUSSIAN, 2)
    with pytest.raises(InvalidInput):
        efficiency_service.efficiency_comparison(
            ["w", "wp1d"], model_service.identity_theta(2), gaussian_2d, 50, 100, seed=17
        )


def test_sampling_covariance_needs_replications(gaussian_1d, unit_theta):
    with pytest.raises(InvalidInput):
        efficiency_service.estimator_sampling_covariance("w", unit_theta, gaussian_1d, 50, 10, seed=0)
