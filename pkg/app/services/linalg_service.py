import logging
from typing import Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import InvalidInput, SingularMatrix
from app.models.matrices import SpdMatrix, SymMatrix

logger = logging.getLogger(__name__)


class LinalgService:
    """Dense symmetric linear algebra on small matrices (d up to ~50)."""

    def __init__(self):
        self.singular_tol = settings.SINGULAR_TOL
        # eigenvalues closer than this (relative to the largest) share an eigenspace
        self.tie_tol = 1e-10

    def sym(self, array) -> SymMatrix:
        return array if isinstance(array, SymMatrix) else SymMatrix(np.asarray(array, dtype=float))

    def sym_eig(self, matrix) -> Tuple[np.ndarray, np.ndarray]:
        """
        Eigendecomposition of a symmetric matrix.

        Args:
            matrix: SymMatrix or array-like symmetric matrix

        Returns:
            (eigenvalues, eigenvectors) with eigenvalues descending and each
            eigenvector's first nonzero component positive, so identical input
            gives identical output. Inside a group of tied eigenvalues the
            basis is rebuilt from the eigenspace projector by pivoted
            Gram-Schmidt over the coordinate axes, so sym_eig(I) returns Q = I.
        """
        entries = self.sym(matrix).entries
        values, vectors = np.linalg.eigh(entries)
        values = values[::-1].copy()
        vectors = vectors[:, ::-1].copy()
        tie_tol = self.tie_tol * max(float(np.max(np.abs(values))), np.finfo(float).tiny)
        start = 0
        for stop in range(1, values.size + 1):
            if stop < values.size and values[stop - 1] - values[stop] <= tie_tol:
                continue
            if stop - start > 1:
                vectors[:, start:stop] = self._canonical_basis(vectors[:, start:stop])
            start = stop
        for k in range(vectors.shape[1]):
            column = vectors[:, k]
            nonzero = np.flatnonzero(np.abs(column) > 1e-14)
            if nonzero.size and column[nonzero[0]] < 0:
                vectors[:, k] = -column
        return values, vectors

    @staticmethod
    def _canonical_basis(block: np.ndarray) -> np.ndarray:
        """Orthonormal basis of span(block) that depends only on the span."""
        residual = block @ block.T
        basis = np.empty_like(block)
        for k in range(block.shape[1]):
            norms = np.linalg.norm(residual, axis=0)
            # largest residual axis first, lowest index on ties
            pivot = int(np.argmax(norms))
            column = residual[:, pivot] / norms[pivot]
            basis[:, k] = column
            residual = residual - np.outer(column, column @ residual)
        return basis

    def spd(self, array) -> SpdMatrix:
        """Validated SPD matrix; near-singular input raises SingularMatrix."""
        if isinstance(array, SpdMatrix):
            return array
        symmetric = self.sym(array)
        values, vectors = self.sym_eig(symmetric)
        top = float(np.max(np.abs(values)))
        if top == 0.0 or abs(values[-1]) <= self.singular_tol * top:
            condition = float("inf") if values[-1] <= 0 else top / values[-1]
            raise SingularMatrix("matrix is numerically singular", condition_number=condition)
        if values[-1] < 0:
            raise InvalidInput(f"matrix is not positive definite (min eigenvalue {values[-1]:.3e})")
        return SpdMatrix(symmetric.entries, eigenvalues=values, eigenvectors=vectors)

    def _from_spectrum(self, matrix: SpdMatrix, values: np.ndarray) -> SpdMatrix:
        vectors = matrix.eigenvectors
        order = np.argsort(-values, kind="stable")
        values = values[order]
        vectors = vectors[:, order]
        entries = (vectors * values) @ vectors.T
        return SpdMatrix(0.5 * (entries + entries.T), eigenvalues=values, eigenvectors=vectors)

    def _check_conditioning(self, matrix: SpdMatrix):
        if matrix.eigenvalues[-1] <= self.singular_tol * matrix.eigenvalues[0]:
            raise SingularMatrix("matrix is numerically singular", condition_number=matrix.condition_number)

    def spd_power(self, matrix, p: float) -> SpdMatrix:
        matrix = self.spd(matrix)
        self._check_conditioning(matrix)
        return self._from_spectrum(matrix, matrix.eigenvalues ** p)

    def spd_sqrt(self, matrix) -> SpdMatrix:
        return self.spd_power(matrix, 0.5)

    def spd_inv_sqrt(self, matrix) -> SpdMatrix:
        return self.spd_power(matrix, -0.5)

    def spd_inv(self, matrix) -> SpdMatrix:
        return self.spd_power(matrix, -1.0)

    def sylvester_solve(self, a, b) -> SymMatrix:
        """
        Solve AX + XA = B for SPD A and symmetric B.

        In A's eigenbasis the equation decouples: X̃_ij = B̃_ij / (λ_i + λ_j).
        The unique solution is symmetric and satisfies tr X = tr(A⁻¹B)/2.
        """
        a = self.spd(a)
        b = self.sym(b)
        if a.dim != b.dim:
            raise InvalidInput(f"dimension mismatch: A is {a.dim}×{a.dim}, B is {b.dim}×{b.dim}")
        values = a.eigenvalues
        pair_sums = values[:, None] + values[None, :]
        if pair_sums.min() <= self.singular_tol * pair_sums.max():
            raise SingularMatrix("Sylvester operator is singular", condition_number=pair_sums.max() / pair_sums.min())
        vectors = a.eigenvectors
        rotated = vectors.T @ b.entries @ vectors
        solution = vectors @ (rotated / pair_sums) @ vectors.T
        return SymMatrix(0.5 * (solution + solution.T))


# Singleton instance
linalg_service = LinalgService()
