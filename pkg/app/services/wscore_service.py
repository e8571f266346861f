import logging
import math
from typing import List, Tuple, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import InvalidInput
from app.core.seeding import make_rng
from app.models.matrices import SymMatrix
from app.models.params import AffineParams, ParamIndex, param_indices
from app.models.score import QuadraticScore
from app.models.shape import ShapeDistribution
from app.schemas.reports import OrthogonalityReport
from app.services.linalg_service import linalg_service
from app.services.model_service import model_service
from app.services.shape_service import shape_service

logger = logging.getLogger(__name__)


class WScoreService:
    """Wasserstein scores of the elliptical model.

    Every score is quadratic in x and independent of the waveform g, so none
    of the score constructors takes a shape.
    """

    def _centered(self, theta: AffineParams, a: SymMatrix, b: np.ndarray) -> QuadraticScore:
        # E_θ[½xᵀAx + bᵀx] = ½tr(AΣ) + ½μᵀAμ + bᵀμ
        mu = theta.mu
        mean = 0.5 * np.trace(a.entries @ theta.sigma) + 0.5 * mu @ a.entries @ mu + b @ mu
        return QuadraticScore(A=a, b=b, c=-mean)

    def wscore_mu(self, theta: AffineParams, i: int) -> QuadraticScore:
        """S(x) = x_i − μ_i."""
        if not 1 <= i <= theta.dim:
            raise InvalidInput(f"μ index {i} out of range 1..{theta.dim}")
        b = np.zeros(theta.dim)
        b[i - 1] = 1.0
        return QuadraticScore(A=SymMatrix(np.zeros((theta.dim, theta.dim))), b=b, c=-theta.mu[i - 1])

    def wscore_lambda(self, theta: AffineParams, i: int, j: int) -> QuadraticScore:
        """
        Score of the symmetrized coordinate Λ_ij (i ≤ j).

        A solves Λ²A + AΛ² = −(ΛE_ij + E_ijΛ), b = −Aμ, and c centers the score.
        """
        if not 1 <= i <= j <= theta.dim:
            raise InvalidInput(f"Λ index ({i}, {j}) must satisfy 1 ≤ i ≤ j ≤ {theta.dim}")
        basis = ParamIndex("lambda", i, j).basis(theta.dim)
        lam = theta.lam.entries
        rhs = -(lam @ basis + basis @ lam)
        a = linalg_service.sylvester_solve(linalg_service.spd_power(theta.lam, 2.0), rhs)
        return self._centered(theta, a, -a.entries @ theta.mu)

    def wscore(self, theta: AffineParams, param: ParamIndex) -> QuadraticScore:
        if param.kind == "mu":
            return self.wscore_mu(theta, param.i)
        return self.wscore_lambda(theta, param.i, param.j)

    def all_wscores(self, theta: AffineParams) -> List[QuadraticScore]:
        return [self.wscore(theta, param) for param in param_indices(theta.dim)]

    def transport_velocity(self, score: QuadraticScore, x: np.ndarray) -> np.ndarray:
        """∇S(x) = Ax + b, the velocity of the infinitesimal optimal transport."""
        return score.gradient(x)

    def poisson_residual(
        self,
        theta: AffineParams,
        shape: ShapeDistribution,
        score: QuadraticScore,
        param: ParamIndex,
        x: np.ndarray,
    ) -> np.ndarray:
        """
        ∇log p · ∇S + ΔS + ∂_param log p at x; zero when S is the W-score of param.
        """
        column = param_indices(theta.dim).index(param)
        grad_log_p = model_service.grad_x_log_density(theta, shape, x)
        fisher = model_service.fisher_score(theta, shape, x)[..., column]
        return np.sum(grad_log_p * score.gradient(x), axis=-1) + score.laplacian + fisher

    def w_info_matrix(self, theta: AffineParams) -> np.ndarray:
        """
        G_W with entries E_θ[∇S_aᵀ∇S_b] in closed form.

        With ∇S = Ax + b and Cov[x] = Σ:
        E[(A_a x + b_a)ᵀ(A_b x + b_b)] = tr(A_a Σ A_b) + (A_aμ + b_a)ᵀ(A_bμ + b_b).
        """
        scores = self.all_wscores(theta)
        sigma = theta.sigma
        drifts = np.array([s.A.entries @ theta.mu + s.b for s in scores])
        mats = np.array([s.A.entries for s in scores])
        gram = np.einsum("aij,jk,bki->ab", mats, sigma, mats) + drifts @ drifts.T
        return 0.5 * (gram + gram.T)

    def score_gradients(self, scores: List[QuadraticScore], x: np.ndarray) -> np.ndarray:
        """(n, m, d) array of ∇S_a at every row of x."""
        return np.stack([s.gradient(x) for s in scores], axis=-2)

    def w_info_matrix_mc(
        self,
        theta: AffineParams,
        shape: ShapeDistribution,
        n: int,
        seed: int,
        with_std_error: bool = False,
    ) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
        """Monte Carlo G_W: (1/n) Σ_t ∇S_a(x_t)ᵀ∇S_b(x_t) over model draws."""
        if n < 1000:
            raise InvalidInput(f"Monte Carlo information matrix needs n ≥ 10³, got {n}")
        x = model_service.sample_model(theta, shape, n, seed)
        grads = self.score_gradients(self.all_wscores(theta), x)
        products = np.einsum("tad,tbd->tab", grads, grads)
        gram = products.mean(axis=0)
        if with_std_error:
            return gram, products.std(axis=0) / math.sqrt(n)
        return gram

    def w_estimating_equations(self, theta: AffineParams, data: np.ndarray) -> np.ndarray:
        """Empirical mean of every W-score; all zero at the W-estimate."""
        data = np.atleast_2d(np.asarray(data, dtype=float))
        return np.array([np.mean(s.value(data)) for s in self.all_wscores(theta)])

    def orthogonality_check(
        self,
        shape1: ShapeDistribution,
        shape2: ShapeDistribution,
        n: int,
        seed: int,
    ) -> OrthogonalityReport:
        """
        Pair each W-score at θ = (0, I) with δp = f₁ − f₂.

        Both shapes share moments up to order two, so ⟨S, δp⟩ = E_f₁[S] − E_f₂[S]
        vanishes for every quadratic S.
        """
        if shape1.dim != shape2.dim:
            raise InvalidInput("shapes must share the dimension")
        theta = model_service.identity_theta(shape1.dim)
        scores = self.all_wscores(theta)
        first = shape_service.draw(shape1, n, make_rng(seed, 0))
        second = shape_service.draw(shape2, n, make_rng(seed, 1))

        differences, errors = [], []
        for score in scores:
            v1, v2 = score.value(first), score.value(second)
            differences.append(float(v1.mean() - v2.mean()))
            errors.append(float(math.sqrt(v1.var() / n + v2.var() / n)))
        z = [abs(dv) / max(se, np.finfo(float).tiny) for dv, se in zip(differences, errors)]
        max_z = float(max(z))
        return OrthogonalityReport(
            params=[p.label for p in param_indices(shape1.dim)],
            differences=differences,
            std_errors=errors,
            max_z_score=max_z,
            passed=max_z <= settings.MC_GATE_SE,
        )


# Singleton instance
wscore_service = WScoreService()
