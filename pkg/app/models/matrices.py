from dataclasses import dataclass

import numpy as np

from app.core.config import settings
from app.core.exceptions import InvalidInput


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Real symmetric d×d matrix, exactly symmetric after construction.

    Inputs whose relative asymmetry exceeds ``settings.SYMMETRY_TOL`` are
    rejected; anything closer is replaced by (S + Sᵀ)/2.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim == 0:
            entries = entries.reshape(1, 1)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise InvalidInput(f"expected a non-empty square matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InvalidInput("matrix has non-finite entries")
        scale = float(np.max(np.abs(entries)))
        asymmetry = float(np.max(np.abs(entries - entries.T)))
        if asymmetry > settings.SYMMETRY_TOL * max(scale, np.finfo(float).tiny):
            raise InvalidInput(f"matrix is not symmetric (max asymmetry {asymmetry:.3e})")
        object.__setattr__(self, "entries", _frozen(0.5 * (entries + entries.T)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, entries={self.entries.tolist()})"


@dataclass(frozen=True, eq=False)
class SpdMatrix(SymMatrix):
    """Symmetric positive-definite matrix with its cached eigendecomposition.

    Build these through ``linalg_service.spd``; direct construction must
    supply eigenpairs that reconstruct ``entries``.
    """

    eigenvalues: np.ndarray = None
    eigenvectors: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        if self.eigenvalues is None or self.eigenvectors is None:
            raise InvalidInput("SpdMatrix requires its eigendecomposition")
        values = _frozen(self.eigenvalues)
        vectors = _frozen(self.eigenvectors)
        if values.shape != (self.dim,) or vectors.shape != (self.dim, self.dim):
            raise InvalidInput("eigendecomposition does not match matrix dimension")
        if np.any(values <= 0):
            raise InvalidInput("eigenvalues must be positive")
        if np.max(np.abs(vectors.T @ vectors - np.eye(self.dim))) > 1e-10:
            raise InvalidInput("eigenvectors are not orthonormal")
        rebuilt = (vectors * values) @ vectors.T
        if np.max(np.abs(rebuilt - self.entries)) > 1e-10 * float(np.max(np.abs(self.entries))):
            raise InvalidInput("eigendecomposition does not reconstruct the matrix")
        object.__setattr__(self, "eigenvalues", values)
        object.__setattr__(self, "eigenvectors", vectors)

    @property
    def condition_number(self) -> float:
        return float(self.eigenvalues[0] / self.eigenvalues[-1])

    @property
    def log_det(self) -> float:
        return float(np.sum(np.log(self.eigenvalues)))

    @property
    def det(self) -> float:
        return float(np.prod(self.eigenvalues))

    def power(self, p: float) -> np.ndarray:
        """Q diag(λᵖ) Qᵀ as a plain array."""
        vectors = self.eigenvectors
        result = (vectors * self.eigenvalues ** p) @ vectors.T
        return 0.5 * (result + result.T)
