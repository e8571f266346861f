from app.models.matrices import SpdMatrix, SymMatrix
from app.models.params import AffineParams, ParamIndex, n_params, param_indices
from app.models.score import QuadraticScore
from app.models.shape import ShapeDistribution, ShapeKind
from app.models.statistic import StatisticFn

__all__ = [
    "SymMatrix",
    "SpdMatrix",
    "AffineParams",
    "ParamIndex",
    "param_indices",
    "n_params",
    "QuadraticScore",
    "ShapeDistribution",
    "ShapeKind",
    "StatisticFn",
]
