from dataclasses import dataclass
from typing import Literal

import numpy as np

from app.core.exceptions import InvalidInput
from app.models.matrices import SpdMatrix, _frozen


@dataclass(frozen=True, order=True)
class ParamIndex:
    """One coordinate of θ: ``mu`` with index i, or ``lambda`` with i ≤ j (1-based).

    Λ coordinates are upper-triangular: Λ = Σ_{i≤j} θ_ij E_ij with
    E_ii = e_i e_iᵀ and E_ij = e_i e_jᵀ + e_j e_iᵀ.
    """

    kind: Literal["mu", "lambda"]
    i: int
    j: int = 0

    @property
    def label(self) -> str:
        if self.kind == "mu":
            return f"mu{self.i}"
        return f"lam{self.i}{self.j}"

    def basis(self, dim: int) -> np.ndarray:
        """Symmetrized basis matrix E_ij of a Λ coordinate."""
        if self.kind != "lambda":
            raise InvalidInput(f"{self.label} has no basis matrix")
        basis = np.zeros((dim, dim))
        basis[self.i - 1, self.j - 1] = 1.0
        basis[self.j - 1, self.i - 1] = 1.0
        return basis


def param_indices(dim: int) -> list[ParamIndex]:
    """Coordinate order: μ₁..μ_d, then Λ_ij for i ≤ j row-major."""
    if dim < 1:
        raise InvalidInput(f"dimension must be positive, got {dim}")
    indices = [ParamIndex("mu", i) for i in range(1, dim + 1)]
    indices += [ParamIndex("lambda", i, j) for i in range(1, dim + 1) for j in range(i, dim + 1)]
    return indices


def n_params(dim: int) -> int:
    return dim + dim * (dim + 1) // 2


@dataclass(frozen=True, eq=False)
class AffineParams:
    """θ = (μ, Λ) of the deformation model p(x, θ) = |Λ| f(Λ(x − μ))."""

    mu: np.ndarray
    lam: SpdMatrix

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if not isinstance(self.lam, SpdMatrix):
            raise InvalidInput("Λ must be a positive-definite SpdMatrix")
        if mu.shape != (self.lam.dim,):
            raise InvalidInput(f"μ has shape {mu.shape}, expected ({self.lam.dim},)")
        if not np.all(np.isfinite(mu)):
            raise InvalidInput("μ has non-finite entries")
        object.__setattr__(self, "mu", _frozen(mu))

    @property
    def dim(self) -> int:
        return self.lam.dim

    @property
    def n_params(self) -> int:
        return n_params(self.dim)

    @property
    def sigma(self) -> np.ndarray:
        """Model covariance Σ = Λ⁻²."""
        return self.lam.power(-2.0)

    def to_vector(self) -> np.ndarray:
        """θ in ParamIndex order."""
        upper = self.lam.entries[np.triu_indices(self.dim)]
        return np.concatenate([self.mu, upper])

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "lambda": self.lam.entries.tolist()}
