import logging
import math
from typing import Optional, Union

import numpy as np
from scipy import special

from app.core.config import settings
from app.core.exceptions import InvalidInput, OutsideSupport
from app.core.seeding import make_rng
from app.models.shape import ShapeDistribution, ShapeKind
from app.schemas.reports import MomentReport

logger = logging.getLogger(__name__)


class ShapeService:
    """Standard waveforms: unit mass, zero mean, identity covariance."""

    def make_shape(self, kind: Union[ShapeKind, str], dim: int, nu: Optional[float] = None) -> ShapeDistribution:
        """
        Build a standardized spherically symmetric shape.

        Args:
            kind: gaussian, uniform-ball or student-t
            dim: dimension d ≥ 1
            nu: degrees of freedom, student-t only, must exceed 2

        Returns:
            ShapeDistribution with its closed-form normalizer log g(0)
        """
        try:
            kind = ShapeKind(kind)
        except ValueError:
            raise InvalidInput(f"unknown shape kind: {kind}")
        if int(dim) != dim or dim < 1:
            raise InvalidInput(f"dimension must be a positive integer, got {dim}")
        dim = int(dim)
        half = 0.5 * dim

        if kind is ShapeKind.GAUSSIAN:
            return ShapeDistribution(kind, dim, log_normalizer=-half * math.log(2 * math.pi))

        if kind is ShapeKind.UNIFORM_BALL:
            radius = math.sqrt(dim + 2)
            # 1 / volume of the radius-R ball
            log_norm = special.gammaln(half + 1) - half * math.log(math.pi) - dim * math.log(radius)
            return ShapeDistribution(kind, dim, log_normalizer=float(log_norm), support_radius=radius)

        if nu is None or not nu > 2:
            raise InvalidInput(f"student-t needs nu > 2 for a finite covariance, got {nu}")
        nu = float(nu)
        log_norm = (
            special.gammaln(0.5 * (nu + dim))
            - special.gammaln(0.5 * nu)
            - half * math.log(math.pi * (nu - 2))
        )
        return ShapeDistribution(kind, dim, nu=nu, log_normalizer=float(log_norm))

    # Radial profile

    def log_radial(self, shape: ShapeDistribution, r: np.ndarray) -> np.ndarray:
        """log g(r); −∞ outside a compact support."""
        r = np.asarray(r, dtype=float)
        if shape.kind is ShapeKind.GAUSSIAN:
            return shape.log_normalizer - 0.5 * r ** 2
        if shape.kind is ShapeKind.UNIFORM_BALL:
            return np.where(r <= shape.support_radius, shape.log_normalizer, -np.inf)
        exponent = 0.5 * (shape.nu + shape.dim)
        return shape.log_normalizer - exponent * np.log1p(r ** 2 / (shape.nu - 2))

    def log_density(self, shape: ShapeDistribution, z: np.ndarray) -> np.ndarray:
        """log f(z) for one point (d,) or every row of (n, d)."""
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != shape.dim:
            raise InvalidInput(f"point has dimension {z.shape[-1]}, shape has {shape.dim}")
        if not np.all(np.isfinite(z)):
            raise InvalidInput("point has non-finite entries")
        return self.log_radial(shape, np.linalg.norm(z, axis=-1))

    def _check_interior(self, shape: ShapeDistribution, r: np.ndarray):
        if np.any(r < 0):
            raise InvalidInput("radius must be non-negative")
        if shape.kind is ShapeKind.UNIFORM_BALL and np.any(r >= shape.support_radius):
            raise OutsideSupport(f"radius on or beyond the ball boundary {shape.support_radius:.6g}")

    def radial_log_deriv(self, shape: ShapeDistribution, r: np.ndarray) -> np.ndarray:
        """g′(r)/g(r)."""
        r = np.asarray(r, dtype=float)
        self._check_interior(shape, r)
        return r * self._ratio(shape, r)

    def radial_log_deriv_ratio(self, shape: ShapeDistribution, r: np.ndarray) -> np.ndarray:
        """g′(r)/(r g(r)), finite at r = 0 for every supported shape."""
        r = np.asarray(r, dtype=float)
        self._check_interior(shape, r)
        return self._ratio(shape, r)

    def _ratio(self, shape: ShapeDistribution, r: np.ndarray) -> np.ndarray:
        if shape.kind is ShapeKind.GAUSSIAN:
            return -np.ones_like(r)
        if shape.kind is ShapeKind.UNIFORM_BALL:
            return np.zeros_like(r)
        return -(shape.nu + shape.dim) / (shape.nu - 2 + r ** 2)

    # Sampling

    def draw(self, shape: ShapeDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
        """n i.i.d. draws from f using the given generator."""
        if int(n) != n or n < 1:
            raise InvalidInput(f"sample size must be a positive integer, got {n}")
        n, d = int(n), shape.dim
        if shape.kind is ShapeKind.GAUSSIAN:
            return rng.standard_normal((n, d))
        if shape.kind is ShapeKind.UNIFORM_BALL:
            direction = rng.standard_normal((n, d))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = shape.support_radius * rng.random(n) ** (1.0 / d)
            return direction * radius[:, None]
        gauss = rng.standard_normal((n, d))
        chi2 = rng.chisquare(shape.nu, size=n)
        return gauss * np.sqrt((shape.nu - 2) / chi2)[:, None]

    def sample_standard(self, shape: ShapeDistribution, n: int, seed: int, stream_index: int = 0) -> np.ndarray:
        return self.draw(shape, n, make_rng(seed, stream_index))

    def verify_standardization(self, shape: ShapeDistribution, n: int, seed: int) -> MomentReport:
        """
        Monte Carlo check of ∫f = 1, ∫z f = 0 and ∫zzᵀ f = I.

        Deviations are compared with their own standard errors; the shape
        fails when any entry is more than ``settings.MC_GATE_SE`` errors out.
        """
        if n < 10_000:
            raise InvalidInput(f"standardization check needs n ≥ 10⁴, got {n}")
        z = self.sample_standard(shape, n, seed)
        d = shape.dim
        root_n = math.sqrt(n)

        mean = z.mean(axis=0)
        mean_se = z.std(axis=0) / root_n

        products = z[:, :, None] * z[:, None, :]
        second = products.mean(axis=0)
        second_se = products.std(axis=0) / root_n
        deviation = second - np.eye(d)

        mean_z = np.abs(mean) / np.maximum(mean_se, np.finfo(float).tiny)
        cov_z = np.abs(deviation) / np.maximum(second_se, np.finfo(float).tiny)
        max_z = float(max(mean_z.max(), cov_z.max()))
        passed = max_z <= settings.MC_GATE_SE
        if not passed:
            logger.warning(f"Standardization check failed for {shape.label} d={d}: {max_z:.2f} SE")

        return MomentReport(
            shape=shape.label,
            dim=d,
            n=n,
            mean=mean.tolist(),
            covariance=second.tolist(),
            max_mean_dev=float(np.abs(mean).max()),
            max_cov_dev=float(np.abs(deviation).max()),
            mean_se=float(mean_se.max()),
            cov_se=float(second_se.max()),
            max_z_score=max_z,
            passed=passed,
        )

    # One-dimensional marginals, used by the order-statistic estimator

    def _require_1d(self, shape: ShapeDistribution):
        if shape.dim != 1:
            raise InvalidInput(f"one-dimensional shape required, got d={shape.dim}")

    def cdf_1d(self, shape: ShapeDistribution, z: np.ndarray) -> np.ndarray:
        self._require_1d(shape)
        z = np.asarray(z, dtype=float)
        if shape.kind is ShapeKind.GAUSSIAN:
            return special.ndtr(z)
        if shape.kind is ShapeKind.UNIFORM_BALL:
            radius = shape.support_radius
            return np.clip((z + radius) / (2 * radius), 0.0, 1.0)
        return special.stdtr(shape.nu, z * math.sqrt(shape.nu / (shape.nu - 2)))

    def density_1d(self, shape: ShapeDistribution, z: np.ndarray) -> np.ndarray:
        self._require_1d(shape)
        return np.exp(self.log_radial(shape, np.abs(np.asarray(z, dtype=float))))

    def quantile_1d(self, shape: ShapeDistribution, p: np.ndarray) -> np.ndarray:
        """F⁻¹(p) for p in (0, 1) by vectorized bisection on the CDF."""
        self._require_1d(shape)
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise InvalidInput("quantile levels must lie strictly inside (0, 1)")
        bound = 1.0
        while (self.cdf_1d(shape, -bound) > p.min() or self.cdf_1d(shape, bound) < p.max()) and bound < 1e300:
            bound *= 2.0
        lo = np.full(p.shape, -bound)
        hi = np.full(p.shape, bound)
        for _ in range(settings.BISECTION_ITER):
            mid = 0.5 * (lo + hi)
            below = self.cdf_1d(shape, mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
                break
        return 0.5 * (lo + hi)

    def tail_first_moment_1d(self, shape: ShapeDistribution, a: np.ndarray) -> np.ndarray:
        """∫_a^∞ z f(z) dz in closed form; zero at a = ±∞."""
        self._require_1d(shape)
        a = np.asarray(a, dtype=float)
        finite = np.isfinite(a)
        safe = np.where(finite, a, 0.0)
        if shape.kind is ShapeKind.GAUSSIAN:
            moment = np.exp(-0.5 * safe ** 2) / math.sqrt(2 * math.pi)
        elif shape.kind is ShapeKind.UNIFORM_BALL:
            radius = shape.support_radius
            moment = np.where(np.abs(safe) < radius, (radius ** 2 - safe ** 2) / (4 * radius), 0.0)
        else:
            nu = shape.nu
            scale = math.sqrt((nu - 2) / nu)
            u = safe / scale
            log_pdf = (
                special.gammaln(0.5 * (nu + 1))
                - special.gammaln(0.5 * nu)
                - 0.5 * math.log(nu * math.pi)
                - 0.5 * (nu + 1) * np.log1p(u ** 2 / nu)
            )
            moment = scale * (nu + u ** 2) / (nu - 1) * np.exp(log_pdf)
        return np.where(finite, moment, 0.0)


# Singleton instance
shape_service = ShapeService()
