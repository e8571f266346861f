import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import DegenerateEstimate, InvalidInput, UnsupportedShape, WasserstatError
from app.core.seeding import make_rng, parallel_map
from app.models.params import AffineParams, param_indices
from app.models.shape import ShapeDistribution, ShapeKind
from app.models.statistic import StatisticFn
from app.schemas.reports import BoundCheck, EstimatorMethod, RobustnessReport, SamplingCovarianceReport
from app.services.estimator_service import estimator_service
from app.services.linalg_service import linalg_service
from app.services.model_service import model_service
from app.services.wscore_service import wscore_service

logger = logging.getLogger(__name__)

BATCHES = 20


def _gram(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Mean over rows of left_t right_tᵀ for (n, a, d) and (n, b, d) gradient stacks."""
    return np.einsum("tad,tbd->ab", left, right) / left.shape[0]


def _population_cov(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a, b)-block of the 1/n covariance between the columns of a and b."""
    return (a - a.mean(axis=0)).T @ (b - b.mean(axis=0)) / a.shape[0]


class EfficiencyService:
    """W-covariance, information matrices and the bounds relating them."""

    # Statistic menu

    def make_statistic(self, name: str, theta: AffineParams) -> StatisticFn:
        """
        Single-observation statistics with analytic gradients and Laplacians.

        linear: x; scaled_linear: 2x; square: x_i²; cube: x_i³ (coordinatewise);
        wscores: the m W-scores of theta.
        """
        d = theta.dim
        eye = np.eye(d)

        if name == "linear":
            return StatisticFn(
                name, d,
                value=lambda x: np.asarray(x, dtype=float),
                gradient=lambda x: np.broadcast_to(eye, (len(x), d, d)),
                laplacian=lambda x: np.zeros((len(x), d)),
            )
        if name == "scaled_linear":
            return StatisticFn(
                name, d,
                value=lambda x: 2.0 * np.asarray(x, dtype=float),
                gradient=lambda x: np.broadcast_to(2.0 * eye, (len(x), d, d)),
                laplacian=lambda x: np.zeros((len(x), d)),
            )
        if name == "square":
            return StatisticFn(
                name, d,
                value=lambda x: np.asarray(x, dtype=float) ** 2,
                gradient=lambda x: 2.0 * np.asarray(x, dtype=float)[:, :, None] * eye,
                laplacian=lambda x: np.full((len(x), d), 2.0),
            )
        if name == "cube":
            return StatisticFn(
                name, d,
                value=lambda x: np.asarray(x, dtype=float) ** 3,
                gradient=lambda x: 3.0 * np.asarray(x, dtype=float)[:, :, None] ** 2 * eye,
                laplacian=lambda x: 6.0 * np.asarray(x, dtype=float),
            )
        if name == "wscores":
            scores = wscore_service.all_wscores(theta)
            traces = np.array([s.laplacian for s in scores])
            return StatisticFn(
                name, len(scores),
                value=lambda x: np.stack([s.value(x) for s in scores], axis=-1),
                gradient=lambda x: wscore_service.score_gradients(scores, x),
                laplacian=lambda x: np.broadcast_to(traces, (len(x), len(scores))),
            )
        raise InvalidInput(f"unknown statistic: {name}")

    # Covariances and information

    def w_covariance(
        self,
        stat: StatisticFn,
        theta: AffineParams,
        shape: ShapeDistribution,
        n: int,
        seed: int,
        with_std_error: bool = False,
    ) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
        """Var^W = E_θ[(∇θ̂_a)ᵀ(∇θ̂_b)] by Monte Carlo over model draws."""
        if n < 1000:
            raise InvalidInput(f"W-covariance needs n ≥ 10³, got {n}")
        x = model_service.sample_model(theta, shape, n, seed)
        grads = stat.gradient(x)
        products = np.einsum("tad,tbd->tab", grads, grads)
        mean = products.mean(axis=0)
        if with_std_error:
            return mean, products.std(axis=0) / math.sqrt(n)
        return mean

    def fisher_info_mc(self, theta: AffineParams, shape: ShapeDistribution, n: int, seed: int) -> np.ndarray:
        """g_F = E_θ[∂l ∂lᵀ] by Monte Carlo."""
        if not shape.is_smooth:
            raise UnsupportedShape(f"Fisher information needs a smooth waveform, got {shape.label}")
        x = model_service.sample_model(theta, shape, n, seed)
        scores = model_service.fisher_score(theta, shape, x)
        info = scores.T @ scores / n
        return 0.5 * (info + info.T)

    def fisher_information_gaussian(self, theta: AffineParams) -> np.ndarray:
        """
        Closed-form g_F for the Gaussian waveform.

        μ-block Λ², cross-block 0, and for the Λ-block
        2 tr(M_a Σ M_b Σ) with M_a = (ΛE_a + E_aΛ)/2.
        """
        d = theta.dim
        sigma = theta.sigma
        lam = theta.lam.entries
        params = [p for p in param_indices(d) if p.kind == "lambda"]
        mats = [0.5 * (lam @ p.basis(d) + p.basis(d) @ lam) for p in params]
        info = np.zeros((theta.n_params, theta.n_params))
        info[:d, :d] = theta.lam.power(2.0)
        for a, ma in enumerate(mats):
            for b, mb in enumerate(mats):
                info[d + a, d + b] = 2.0 * np.trace(ma @ sigma @ mb @ sigma)
        return 0.5 * (info + info.T)

    # Wasserstein–Cramér–Rao

    def wcr_bound_check(
        self,
        stat: StatisticFn,
        theta: AffineParams,
        shape: ShapeDistribution,
        n: int,
        seed: int,
        fd_check: bool = False,
        fd_step: float = 1e-4,
    ) -> BoundCheck:
        """
        Var^W(θ̂) against the sandwich J G_W⁻¹ Jᵀ.

        J_ab = ∂_b E_θ[θ̂_a] = E_θ[(∇θ̂_a)ᵀ ∇S_b] comes from the same sample as
        Var^W. The gap's standard error uses the per-sample influence of
        vᵀ(lhs − rhs)v along the minimizing eigenvector v.
        """
        g_inv = linalg_service.spd_inv(wscore_service.w_info_matrix(theta)).entries
        x = model_service.sample_model(theta, shape, n, seed)
        grads = stat.gradient(x)
        score_grads = wscore_service.score_gradients(wscore_service.all_wscores(theta), x)

        lhs = _gram(grads, grads)
        jacobian = _gram(grads, score_grads)
        rhs = jacobian @ g_inv @ jacobian.T
        lhs, rhs = 0.5 * (lhs + lhs.T), 0.5 * (rhs + rhs.T)
        values, vectors = linalg_service.sym_eig(lhs - rhs)
        v = vectors[:, -1]

        along = np.einsum("k,tkd->td", v, grads)
        weights = g_inv @ jacobian.T @ v
        drift = np.einsum("b,tbd->td", weights, score_grads)
        influence = np.sum(along ** 2, axis=1) - 2.0 * np.sum(along * drift, axis=1)
        gap_se = float(influence.std() / math.sqrt(n))

        fd_dev = None
        if fd_check:
            fd_dev = float(np.max(np.abs(self.fd_jacobian(stat, theta, shape, n, seed, fd_step) - jacobian)))

        return BoundCheck(
            statistic=stat.name,
            lhs=lhs.tolist(),
            rhs=rhs.tolist(),
            jacobian=jacobian.tolist(),
            min_eig_gap=float(values[-1]),
            gap_std_error=gap_se,
            fd_jacobian_max_dev=fd_dev,
        )

    def fd_jacobian(
        self,
        stat: StatisticFn,
        theta: AffineParams,
        shape: ShapeDistribution,
        n: int,
        seed: int,
        step: float = 1e-4,
    ) -> np.ndarray:
        """∂_b E_θ[θ̂_a] by central differences in θ with common random numbers."""
        base = theta.to_vector()
        columns = []
        for b in range(base.size):
            means = []
            for sign in (1.0, -1.0):
                shifted = base.copy()
                shifted[b] += sign * step
                x = model_service.sample_model(model_service.vector_to_theta(shifted, theta.dim), shape, n, seed)
                means.append(stat.value(x).mean(axis=0))
            columns.append((means[0] - means[1]) / (2 * step))
        return np.stack(columns, axis=1)

    # Noise robustness

    def _robustness_terms(self, clean, noisy_plus, noisy_minus, laplacian, grads, sigma2):
        base_var = _population_cov(clean, clean)
        increases = []
        for plus, minus in zip(noisy_plus, noisy_minus):
            both = np.concatenate([plus, minus])
            increases.append(_population_cov(both, both) - base_var)
        slope = sum(increases) / float(np.sum(sigma2))
        cross = _population_cov(clean, laplacian)
        correction = 0.5 * (cross + cross.T)
        return increases, slope, correction, _gram(grads, grads)

    def noise_robustness(
        self,
        stat: StatisticFn,
        theta: AffineParams,
        shape: ShapeDistribution,
        sigma2_grid: Sequence[float],
        n: int,
        seed: int,
    ) -> RobustnessReport:
        """
        Variance increase under small additive noise against Var^W.

        Var[θ̂(X+Z)] − Var[θ̂(X)] ≈ σ² (Var^W + ½(Cov[θ̂_a, Δθ̂_b] + Cov[θ̂_b, Δθ̂_a])).
        The slope is fitted through the origin with weights 1/σ², which gives
        Σ increase / Σ σ². The same X and the antithetic pair ±Z are reused
        for every σ². Standard errors come from batch means.
        """
        sigma2 = np.asarray(sorted(sigma2_grid), dtype=float)
        if sigma2.size < 3 or np.any(sigma2 <= 0):
            raise InvalidInput("noise robustness needs at least three positive σ² values")
        limit = 0.1 * np.trace(theta.sigma) / theta.dim
        if sigma2.max() > limit:
            raise InvalidInput(f"σ² must not exceed {limit:.4g} (0.1·tr(Σ)/d)")
        if n < 1000:
            raise InvalidInput(f"noise robustness needs n ≥ 10³, got {n}")

        x = model_service.sample_model(theta, shape, n, seed)
        noise = make_rng(seed, 1).standard_normal(x.shape)
        clean = stat.value(x)
        laplacian = stat.laplacian(x)
        grads = stat.gradient(x)
        plus = [stat.value(x + math.sqrt(s) * noise) for s in sigma2]
        minus = [stat.value(x - math.sqrt(s) * noise) for s in sigma2]

        increases, slope, correction, var_w = self._robustness_terms(clean, plus, minus, laplacian, grads, sigma2)

        residuals = []
        for chunk in np.array_split(np.arange(n), BATCHES):
            _, b_slope, b_corr, b_var = self._robustness_terms(
                clean[chunk], [p[chunk] for p in plus], [m[chunk] for m in minus],
                laplacian[chunk], grads[chunk], sigma2,
            )
            residuals.append(b_slope - b_corr - b_var)
        std_error = np.std(np.array(residuals), axis=0, ddof=1) / math.sqrt(BATCHES)

        return RobustnessReport(
            statistic=stat.name,
            sigma2_grid=sigma2.tolist(),
            variance_increase=[inc.tolist() for inc in increases],
            slope=slope.tolist(),
            correction=correction.tolist(),
            var_w=var_w.tolist(),
            std_error=std_error.tolist(),
        )

    # Estimator sampling covariance

    def fisher_bound(self, theta: AffineParams, shape: ShapeDistribution, n: int, seed: int, mc_size: int = 200_000) -> Optional[np.ndarray]:
        """g_F⁻¹ / n, or None for waveforms without Fisher information."""
        if not shape.is_smooth:
            return None
        if shape.kind is ShapeKind.GAUSSIAN:
            info = self.fisher_information_gaussian(theta)
        else:
            info = self.fisher_info_mc(theta, shape, mc_size, seed)
        return linalg_service.spd_inv(info).entries / n

    def estimator_sampling_covariance(
        self,
        method: Union[EstimatorMethod, str],
        theta: AffineParams,
        shape: ShapeDistribution,
        n: int,
        replications: int,
        seed: int,
    ) -> SamplingCovarianceReport:
        """
        Covariance of θ̂ across independent n-sample datasets.

        Replications whose estimator raises are excluded and counted. A method
        that cannot run on this shape at all is rejected before sampling.
        """
        method = EstimatorMethod(method)
        if replications < 100:
            raise InvalidInput(f"sampling covariance needs at least 100 replications, got {replications}")
        if method is EstimatorMethod.WP1D and shape.dim != 1:
            raise InvalidInput(f"order-statistic estimator is one-dimensional, shape has d={shape.dim}")
        if method is EstimatorMethod.MLE and not shape.is_smooth:
            raise UnsupportedShape(f"maximum likelihood needs a smooth waveform, got {shape.label}")

        def replicate(r: int) -> Optional[np.ndarray]:
            data = model_service.sample_model(theta, shape, n, seed, stream_index=r)
            try:
                report = estimator_service.estimate(method, data, shape)
            except WasserstatError as e:
                logger.debug(f"Replication {r} failed: {e.name}: {e}")
                return None
            if method is EstimatorMethod.MLE and not report.converged:
                return None
            return report.estimate.to_vector()

        results = parallel_map(replicate, range(replications))
        estimates = np.array([r for r in results if r is not None])
        failed = replications - len(estimates)
        if failed:
            logger.warning(f"{failed} of {replications} {method.value} replications excluded")
        if len(estimates) < 2:
            raise DegenerateEstimate(f"only {len(estimates)} replications succeeded")

        bound = self.fisher_bound(theta, shape, n, seed)
        covariance = np.cov(estimates, rowvar=False, ddof=1).reshape(theta.n_params, theta.n_params)
        return SamplingCovarianceReport(
            method=method,
            n=n,
            replications=replications,
            failed=failed,
            params=[p.label for p in param_indices(theta.dim)],
            mean_estimate=estimates.mean(axis=0).tolist(),
            covariance=(0.5 * (covariance + covariance.T)).tolist(),
            fisher_bound=None if bound is None else bound.tolist(),
        )

    def efficiency_comparison(
        self,
        methods: Sequence[Union[EstimatorMethod, str]],
        theta: AffineParams,
        shape: ShapeDistribution,
        n: int,
        replications: int,
        seed: int,
    ) -> List[SamplingCovarianceReport]:
        """Sampling covariance of each method on the same replicated datasets."""
        return [
            self.estimator_sampling_covariance(method, theta, shape, n, replications, seed)
            for method in methods
        ]


# Singleton instance
efficiency_service = EfficiencyService()
