from typing import List, Optional, Sequence

from app.core.exceptions import InvalidInput
from app.models.params import AffineParams
from app.models.shape import ShapeDistribution, ShapeKind
from app.schemas.experiment import ExperimentConfig
from app.services.model_service import model_service
from app.services.shape_service import shape_service

DEFAULT_NU = 5.0


def get_dim(config: ExperimentConfig, default: int = 1) -> int:
    """Dimension from --dim, else from μ, else the default."""
    if config.dim is not None:
        return config.dim
    if config.mu is not None:
        return len(config.mu)
    return default


def get_dims(config: ExperimentConfig, defaults: Sequence[int]) -> List[int]:
    return [config.dim] if config.dim is not None else list(defaults)


def get_shape(config: ExperimentConfig, dim: int) -> ShapeDistribution:
    kind = config.shape or ShapeKind.GAUSSIAN
    nu = config.nu if kind is ShapeKind.STUDENT_T else None
    return shape_service.make_shape(kind, dim, nu)


def get_shapes(config: ExperimentConfig, dim: int, defaults: Sequence[ShapeKind]) -> List[ShapeDistribution]:
    """The configured shape, or the command's default menu (student-t at ν = 5)."""
    if config.shape is not None:
        return [get_shape(config, dim)]
    return [
        shape_service.make_shape(kind, dim, (config.nu or DEFAULT_NU) if kind is ShapeKind.STUDENT_T else None)
        for kind in defaults
    ]


def get_theta(config: ExperimentConfig, dim: Optional[int] = None, second: bool = False) -> AffineParams:
    """
    θ from --mu/--lam (or --mu2/--lam2), a random θ from --theta-seed,
    or (0, I) when neither is given.
    """
    mu = config.mu2 if second else config.mu
    lam = config.lam2 if second else config.lam
    dim = dim or get_dim(config)
    if mu is None:
        if lam not in (None, "I"):
            raise InvalidInput("Λ given without μ")
        if config.theta_seed is not None:
            return model_service.random_theta(dim, config.theta_seed, stream_index=int(second))
        return model_service.identity_theta(dim)
    if len(mu) != dim:
        raise InvalidInput(f"μ has {len(mu)} entries, expected d={dim}")
    return model_service.make_theta(mu, "I" if lam is None else lam)


def get_thetas(config: ExperimentConfig, dim: int) -> List[AffineParams]:
    """Random θ per index (seeded by --theta-seed, else --seed), unless θ is pinned by --mu."""
    if config.mu is not None:
        return [get_theta(config, dim)]
    seed = config.theta_seed if config.theta_seed is not None else config.seed
    return [model_service.random_theta(dim, seed, stream_index=k) for k in range(config.n_thetas)]
