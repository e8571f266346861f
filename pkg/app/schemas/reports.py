from pydantic import BaseModel, Field, field_serializer, field_validator, model_validator
from typing import Dict, List, Optional
import enum

import numpy as np

from app.core.config import settings
from app.models.params import AffineParams


def _symmetric(matrix: List[List[float]], tol: float = 1e-10) -> List[List[float]]:
    array = np.asarray(matrix, dtype=float)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(array)))) if array.size else 1.0
    if array.size and np.max(np.abs(array - array.T)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return matrix


class MomentReport(BaseModel):
    shape: str
    dim: int
    n: int
    mean: List[float]
    covariance: List[List[float]]
    max_mean_dev: float
    max_cov_dev: float
    mean_se: float
    cov_se: float
    max_z_score: float
    passed: bool


class EstimatorMethod(str, enum.Enum):
    WMOMENT = "w"
    MLE = "mle"
    WP1D = "wp1d"


class EstimatorReport(BaseModel):
    estimate: AffineParams
    iterations: int = Field(..., ge=0)
    converged: bool
    final_gradient_norm: float = Field(..., ge=0)
    tolerance: float = Field(..., ge=0)
    method: EstimatorMethod

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @model_validator(mode="after")
    def check_convergence(self):
        if self.converged and self.final_gradient_norm > self.tolerance:
            raise ValueError("converged report must have gradient norm within tolerance")
        return self

    @field_serializer("estimate")
    def serialize_estimate(self, estimate: AffineParams):
        return estimate.to_dict()


class DivergenceValue(BaseModel):
    value: float = Field(..., ge=0)
    location_part: Optional[float] = Field(None, ge=0)
    shape_part: Optional[float] = Field(None, ge=0)


class ShiftDecomposition(BaseModel):
    lhs: float
    rhs: float
    gap: float


class BoundCheck(BaseModel):
    statistic: str
    lhs: List[List[float]]
    rhs: List[List[float]]
    jacobian: List[List[float]]
    min_eig_gap: float
    gap_std_error: float = Field(..., ge=0)
    fd_jacobian_max_dev: Optional[float] = None

    @field_validator("lhs", "rhs")
    @classmethod
    def check_symmetric(cls, v):
        return _symmetric(v)

    @property
    def passed(self) -> bool:
        return self.min_eig_gap >= -settings.MC_GATE_SE * self.gap_std_error - 1e-9


class RobustnessReport(BaseModel):
    statistic: str
    sigma2_grid: List[float]
    variance_increase: List[List[List[float]]]
    slope: List[List[float]]
    correction: List[List[float]]
    var_w: List[List[float]]
    std_error: List[List[float]]

    @property
    def z_scores(self) -> np.ndarray:
        residual = np.asarray(self.slope) - np.asarray(self.correction) - np.asarray(self.var_w)
        se = np.asarray(self.std_error)
        return np.abs(residual) / np.maximum(se, np.finfo(float).tiny)


class OrthogonalityReport(BaseModel):
    params: List[str]
    differences: List[float]
    std_errors: List[float]
    max_z_score: float
    passed: bool


class SamplingCovarianceReport(BaseModel):
    method: EstimatorMethod
    n: int
    replications: int
    failed: int = Field(..., ge=0)
    params: List[str]
    mean_estimate: List[float]
    covariance: List[List[float]]
    fisher_bound: Optional[List[List[float]]] = None

    @field_validator("covariance")
    @classmethod
    def check_symmetric(cls, v):
        return _symmetric(v)


class ConsistencyReport(BaseModel):
    shape: str
    dim: int
    ns: List[int]
    mean_errors: List[float]
    slope: float


class RunManifest(BaseModel):
    command: str
    config: Dict
    seed: int
    versions: Dict[str, str]
    started_at: str
    wall_time_seconds: float
    outputs: List[str]
