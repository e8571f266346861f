from dataclasses import dataclass

import numpy as np

from app.core.exceptions import InvalidInput
from app.models.matrices import SymMatrix, _frozen


@dataclass(frozen=True, eq=False)
class QuadraticScore:
    """S(x) = ½ xᵀAx + bᵀx + c, with c fixed by E_θ[S] = 0."""

    A: SymMatrix
    b: np.ndarray
    c: float

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if b.shape != (self.A.dim,):
            raise InvalidInput(f"b has shape {b.shape}, expected ({self.A.dim},)")
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return self.A.dim

    def value(self, x: np.ndarray) -> np.ndarray:
        """Score at one point (d,) or at every row of (n, d)."""
        x = np.asarray(x, dtype=float)
        quad = 0.5 * np.einsum("...i,ij,...j->...", x, self.A.entries, x)
        return quad + x @ self.b + self.c

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.A.entries + self.b

    @property
    def laplacian(self) -> float:
        return self.A.trace
