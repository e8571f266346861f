import logging
from typing import Optional

import numpy as np

from app.core.exceptions import InvalidInput
from app.core.seeding import make_rng
from app.models.params import AffineParams, param_indices
from app.models.shape import ShapeDistribution
from app.services.linalg_service import linalg_service
from app.services.shape_service import shape_service

logger = logging.getLogger(__name__)


class ModelService:
    """Elliptically symmetric deformation model p(x, θ) = |Λ| g(‖Λ(x − μ)‖)."""

    def make_theta(self, mu, lam) -> AffineParams:
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if isinstance(lam, str) and lam.upper() == "I":
            lam = np.eye(mu.shape[0])
        return AffineParams(mu=mu, lam=linalg_service.spd(np.atleast_2d(np.asarray(lam, dtype=float))))

    def identity_theta(self, dim: int) -> AffineParams:
        return self.make_theta(np.zeros(dim), np.eye(dim))

    def random_theta(self, dim: int, seed: int, stream_index: int = 0) -> AffineParams:
        """μ ~ N(0, I), Λ = Q diag(eᵘ) Qᵀ with u ~ U(−½, ½) and Haar-random Q."""
        rng = make_rng(seed, stream_index)
        mu = rng.standard_normal(dim)
        q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
        q = q * np.sign(np.diag(r))
        spectrum = np.exp(rng.uniform(-0.5, 0.5, size=dim))
        return self.make_theta(mu, (q * spectrum) @ q.T)

    def vector_to_theta(self, vector: np.ndarray, dim: int) -> AffineParams:
        """Inverse of AffineParams.to_vector."""
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (len(param_indices(dim)),):
            raise InvalidInput(f"θ vector has shape {vector.shape} for d={dim}")
        lam = np.zeros((dim, dim))
        lam[np.triu_indices(dim)] = vector[dim:]
        lam = lam + np.triu(lam, 1).T
        return self.make_theta(vector[:dim], lam)

    def _check_points(self, theta: AffineParams, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != theta.dim:
            raise InvalidInput(f"points have dimension {x.shape[-1]}, model has {theta.dim}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("points have non-finite entries")
        return x

    def log_density(self, theta: AffineParams, shape: ShapeDistribution, x: np.ndarray) -> np.ndarray:
        """log|Λ| + log g(‖Λ(x − μ)‖) at one point or every row."""
        x = self._check_points(theta, x)
        radius = np.linalg.norm((x - theta.mu) @ theta.lam.entries, axis=-1)
        return theta.lam.log_det + shape_service.log_radial(shape, radius)

    def density(self, theta: AffineParams, shape: ShapeDistribution, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(theta, shape, x))

    def log_likelihood(self, theta: AffineParams, shape: ShapeDistribution, data: np.ndarray) -> float:
        data = np.atleast_2d(np.asarray(data, dtype=float))
        if data.shape[0] < 1:
            raise InvalidInput("log-likelihood needs at least one observation")
        return float(np.sum(self.log_density(theta, shape, data)))

    def draw_model(self, theta: AffineParams, shape: ShapeDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
        z = shape_service.draw(shape, n, rng)
        return z @ theta.lam.power(-1.0) + theta.mu

    def sample_model(
        self,
        theta: AffineParams,
        shape: ShapeDistribution,
        n: int,
        seed: int,
        stream_index: int = 0,
    ) -> np.ndarray:
        """x = Λ⁻¹z + μ with z drawn from the standard shape."""
        if shape.dim != theta.dim:
            raise InvalidInput(f"shape has d={shape.dim}, model has d={theta.dim}")
        return self.draw_model(theta, shape, n, make_rng(seed, stream_index))

    def _radial_weight(self, theta: AffineParams, shape: ShapeDistribution, x: np.ndarray):
        """(y, Λy, g′/(r g)) with y = x − μ."""
        y = x - theta.mu
        u = y @ theta.lam.entries
        weight = shape_service.radial_log_deriv_ratio(shape, np.linalg.norm(u, axis=-1))
        return y, u, weight

    def grad_x_log_density(self, theta: AffineParams, shape: ShapeDistribution, x: np.ndarray) -> np.ndarray:
        """∇ₓ log p = (g′/(r g))(r) Λ²(x − μ)."""
        x = self._check_points(theta, x)
        _, u, weight = self._radial_weight(theta, shape, x)
        return weight[..., None] * (u @ theta.lam.entries)

    def fisher_score(
        self,
        theta: AffineParams,
        shape: ShapeDistribution,
        x: np.ndarray,
        lam_inverse: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """
        ∂_θ log p(x, θ) in ParamIndex order, for one point or every row.

        μ-block: −(g′/(r g)) Λ²(x − μ). Λ-block for symmetrized coordinates:
        tr(Λ⁻¹E_ij) + (g′/(r g)) (x − μ)ᵀ Λ E_ij (x − μ).
        """
        x = self._check_points(theta, x)
        y, u, weight = self._radial_weight(theta, shape, x)
        if lam_inverse is None:
            lam_inverse = theta.lam.power(-1.0)
        mu_block = -weight[..., None] * (u @ theta.lam.entries)

        rows, cols = np.triu_indices(theta.dim)
        off = rows != cols
        quad = u[..., rows] * y[..., cols]
        quad = np.where(off, quad + u[..., cols] * y[..., rows], quad)
        trace = np.where(off, 2.0, 1.0) * lam_inverse[rows, cols]
        lam_block = trace + weight[..., None] * quad
        return np.concatenate([mu_block, lam_block], axis=-1)


# Singleton instance
model_service = ModelService()
