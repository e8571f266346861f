import logging
import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate

from app.core.config import settings
from app.core.exceptions import (
    DegenerateEstimate,
    InvalidInput,
    LineSearchFailure,
    SingularMatrix,
    UnsupportedShape,
)
from app.core.seeding import parallel_map
from app.models.params import AffineParams
from app.models.shape import ShapeDistribution
from app.schemas.reports import ConsistencyReport, EstimatorMethod, EstimatorReport
from app.services.linalg_service import linalg_service
from app.services.model_service import model_service
from app.services.shape_service import shape_service
from app.services.wscore_service import wscore_service

logger = logging.getLogger(__name__)


def _as_data(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[0] < 1:
        raise InvalidInput(f"data must be an n×d array, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise InvalidInput("data has non-finite entries")
    return data


class EstimatorService:
    """Estimators solving the W, Fisher and order-statistic estimating equations."""

    def __init__(self):
        self.tol = settings.MLE_TOL
        self.max_iter = settings.MLE_MAX_ITER
        self.armijo_c = settings.ARMIJO_C
        self.shrink = settings.BACKTRACK_SHRINK
        self.max_backtracks = settings.MAX_BACKTRACKS

    # W-estimator

    def w_estimate(self, data: np.ndarray) -> EstimatorReport:
        """
        Second-order moment estimator.

        μ̂ is the sample mean and Λ̂ the inverse square root of the biased
        (1/n) sample covariance. It zeroes the empirical W-score equations
        whatever the waveform, so it takes no shape.
        """
        data = _as_data(data)
        n, d = data.shape
        if n < d:
            raise SingularMatrix(f"sample covariance is singular with n={n} < d={d}")
        mu = data.mean(axis=0)
        centered = data - mu
        covariance = centered.T @ centered / n
        lam = linalg_service.spd_inv_sqrt(covariance)
        theta = AffineParams(mu=mu, lam=lam)

        residual = float(np.linalg.norm(wscore_service.w_estimating_equations(theta, data)))
        tolerance = 1e-9 * max(1.0, float(np.mean(np.sum(data ** 2, axis=1))))
        if residual > tolerance:
            logger.warning(f"W-estimating equations residual {residual:.3e} above {tolerance:.3e}")
        return EstimatorReport(
            estimate=theta,
            iterations=0,
            converged=residual <= tolerance,
            final_gradient_norm=residual,
            tolerance=tolerance,
            method=EstimatorMethod.WMOMENT,
        )

    # Fisher MLE

    def _mean_log_likelihood(self, mu, lam, shape, data) -> float:
        theta = AffineParams(mu=mu, lam=lam)
        value = float(np.mean(model_service.log_density(theta, shape, data)))
        return value if math.isfinite(value) else -math.inf

    def _log_coordinates_gradient(self, lam, log_values, lam_gradient):
        """
        Pull a gradient in Λ back to S = log Λ.

        With Λ = Q diag(eˢ) Qᵀ, dΛ = Q (F ∘ (Qᵀ dS Q)) Qᵀ where
        F_kl = (e^{s_k} − e^{s_l}) / (s_k − s_l), and e^{s_k} on the diagonal.
        """
        q = lam.eigenvectors
        exp_values = lam.eigenvalues
        diff = log_values[:, None] - log_values[None, :]
        close = np.abs(diff) < 1e-12
        divided = np.where(
            close,
            exp_values[:, None],
            (exp_values[:, None] - exp_values[None, :]) / np.where(close, 1.0, diff),
        )
        return q @ (divided * (q.T @ lam_gradient @ q)) @ q.T

    def mle_estimate(
        self,
        data: np.ndarray,
        shape: ShapeDistribution,
        init: Optional[AffineParams] = None,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
    ) -> EstimatorReport:
        """
        Maximum likelihood by gradient ascent on (μ, log Λ).

        Args:
            data: n×d observations
            shape: smooth waveform (gaussian or student-t)
            init: starting point; the W-estimate when omitted
            tol: stop when the mean Fisher score norm falls below this
            max_iter: iteration cap

        Returns:
            EstimatorReport; ``converged`` is False when max_iter ran out
        """
        if not shape.is_smooth:
            raise UnsupportedShape(f"maximum likelihood needs a smooth waveform, got {shape.label}")
        data = _as_data(data)
        if data.shape[1] != shape.dim:
            raise InvalidInput(f"data has d={data.shape[1]}, shape has d={shape.dim}")
        tol = self.tol if tol is None else tol
        max_iter = self.max_iter if max_iter is None else max_iter
        if tol < 0 or max_iter < 0:
            raise InvalidInput(f"tol and max_iter must be non-negative, got {tol} and {max_iter}")
        if init is None:
            init = self.w_estimate(data).estimate
        if not isinstance(init, AffineParams):
            raise InvalidInput("init must be AffineParams with positive-definite Λ")

        d = shape.dim
        rows, cols = np.triu_indices(d)
        mu, lam = init.mu.copy(), init.lam
        value = self._mean_log_likelihood(mu, lam, shape, data)
        if not math.isfinite(value):
            raise LineSearchFailure("log-likelihood is not finite at the starting point")

        iterations, grad_norm, converged = 0, math.inf, False
        while True:
            theta = AffineParams(mu=mu, lam=lam)
            score = model_service.fisher_score(theta, shape, data, lam_inverse=lam.power(-1.0)).mean(axis=0)
            grad_norm = float(np.linalg.norm(score))
            if grad_norm <= tol:
                converged = True
                break
            if iterations >= max_iter:
                break

            grad_mu = score[:d]
            lam_gradient = np.zeros((d, d))
            lam_gradient[rows, cols] = np.where(rows == cols, score[d:], 0.5 * score[d:])
            lam_gradient = lam_gradient + np.triu(lam_gradient, 1).T
            log_values = np.log(lam.eigenvalues)
            grad_log = self._log_coordinates_gradient(lam, log_values, lam_gradient)

            # Σ-scaled location step and half-scaled log step
            step_mu = theta.sigma @ grad_mu
            step_log = 0.5 * grad_log
            slope = float(grad_mu @ step_mu + np.sum(grad_log * step_log))
            log_lam = (lam.eigenvectors * log_values) @ lam.eigenvectors.T

            noise = 8 * np.finfo(float).eps * max(1.0, abs(value))
            t, accepted = 1.0, False
            for _ in range(self.max_backtracks):
                trial_log = log_lam + t * step_log
                log_eig, vectors = linalg_service.sym_eig(0.5 * (trial_log + trial_log.T))
                trial_lam = linalg_service.spd((vectors * np.exp(log_eig)) @ vectors.T)
                trial_mu = mu + t * step_mu
                trial_value = self._mean_log_likelihood(trial_mu, trial_lam, shape, data)
                sufficient = trial_value >= value + self.armijo_c * t * slope
                # predicted gain below rounding: take the step unless it visibly loses
                flat = t * slope <= noise and trial_value >= value - noise
                if sufficient or flat:
                    accepted = True
                    break
                t *= self.shrink
            iterations += 1
            if not accepted:
                if not math.isfinite(trial_value):
                    raise LineSearchFailure("line search found no finite log-likelihood")
                logger.warning(f"MLE line search stalled at gradient norm {grad_norm:.3e}")
                break
            mu, lam, value = trial_mu, trial_lam, trial_value

        if converged:
            logger.info(f"MLE converged in {iterations} iterations (gradient norm {grad_norm:.3e})")
        else:
            logger.warning(f"MLE stopped after {iterations} iterations at gradient norm {grad_norm:.3e}")
        return EstimatorReport(
            estimate=AffineParams(mu=mu, lam=lam),
            iterations=iterations,
            converged=converged,
            final_gradient_norm=grad_norm,
            tolerance=tol,
            method=EstimatorMethod.MLE,
        )

    # Order-statistic estimator

    def wp_weights(self, shape: ShapeDistribution, n: int, quadrature: bool = False) -> np.ndarray:
        """
        k_i = ∫_{z_{i−1}}^{z_i} z f(z) dz for the equipartition points z_i = F⁻¹(i/n).

        z_0 = −∞ and z_n = +∞; the closed-form upper partial moment covers
        every interval. With ``quadrature`` the interior intervals are
        integrated adaptively instead.
        """
        if n < 2:
            raise InvalidInput(f"order-statistic estimator needs n ≥ 2, got {n}")
        inner = shape_service.quantile_1d(shape, np.arange(1, n) / n)
        points = np.concatenate([[-np.inf], inner, [np.inf]])
        tails = shape_service.tail_first_moment_1d(shape, points)
        weights = tails[:-1] - tails[1:]
        if quadrature:
            for i in range(1, n - 1):
                weights[i], _ = integrate.quad(
                    lambda z: z * shape_service.density_1d(shape, z), points[i], points[i + 1]
                )
        return weights

    def wp_estimate_1d(self, data: np.ndarray, shape: ShapeDistribution, quadrature: bool = False) -> EstimatorReport:
        """θ̂ = (mean, 1/σ̂) with σ̂ = Σ k_i x_(i) on the sorted sample."""
        if shape.dim != 1:
            raise InvalidInput(f"order-statistic estimator is one-dimensional, shape has d={shape.dim}")
        data = _as_data(data)
        if data.shape[1] != 1:
            raise InvalidInput(f"order-statistic estimator needs one column, got {data.shape[1]}")
        ordered = np.sort(data[:, 0], kind="stable")
        n = ordered.shape[0]
        scale = float(self.wp_weights(shape, n, quadrature) @ ordered)
        spread = 1e-12 * max(1.0, float(np.max(np.abs(ordered))))
        if not math.isfinite(scale) or scale <= spread:
            raise DegenerateEstimate(f"order-statistic scale estimate is {scale:.6g}")
        mu = float(ordered.mean())
        theta = model_service.make_theta([mu], [[1.0 / scale]])
        # location W-equation; the scale equation is not zero at this estimate
        location_residual = abs(float(wscore_service.w_estimating_equations(theta, data)[0]))
        return EstimatorReport(
            estimate=theta,
            iterations=0,
            converged=True,
            final_gradient_norm=location_residual,
            tolerance=1e-9 * max(1.0, float(np.max(np.abs(ordered)))),
            method=EstimatorMethod.WP1D,
        )

    # Dispatch and sweeps

    def estimate(
        self,
        method: Union[EstimatorMethod, str],
        data: np.ndarray,
        shape: Optional[ShapeDistribution] = None,
        **kwargs,
    ) -> EstimatorReport:
        method = EstimatorMethod(method)
        if method is EstimatorMethod.WMOMENT:
            return self.w_estimate(data)
        if shape is None:
            raise InvalidInput(f"method {method.value} needs a shape")
        if method is EstimatorMethod.MLE:
            return self.mle_estimate(data, shape, **kwargs)
        return self.wp_estimate_1d(data, shape, **kwargs)

    def consistency_sweep(
        self,
        shape: ShapeDistribution,
        theta: AffineParams,
        ns: Sequence[int],
        replications: int,
        seed: int,
    ) -> ConsistencyReport:
        """Mean ‖θ̂_W − θ‖ per sample size and its log-log slope in n."""
        truth = theta.to_vector()
        mean_errors = []
        for k, n in enumerate(ns):
            def error(r: int, n=n, k=k) -> float:
                data = model_service.sample_model(theta, shape, n, seed, stream_index=k * replications + r)
                return float(np.linalg.norm(self.w_estimate(data).estimate.to_vector() - truth))

            mean_errors.append(float(np.mean(parallel_map(error, range(replications)))))
        slope = float(np.polyfit(np.log(ns), np.log(mean_errors), 1)[0])
        logger.info(f"Consistency sweep {shape.label} d={theta.dim}: slope {slope:.3f}")
        return ConsistencyReport(shape=shape.label, dim=theta.dim, ns=list(ns), mean_errors=mean_errors, slope=slope)


# Singleton instance
estimator_service = EstimatorService()
