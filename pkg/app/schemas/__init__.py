from app.schemas.reports import (
    MomentReport, EstimatorMethod, EstimatorReport, DivergenceValue, ShiftDecomposition,
    BoundCheck, RobustnessReport, OrthogonalityReport, SamplingCovarianceReport,
    ConsistencyReport, RunManifest
)
from app.schemas.experiment import (
    ExperimentConfig, STATISTIC_MENU, parse_vector, parse_matrix
)

__all__ = [
    "MomentReport", "EstimatorMethod", "EstimatorReport", "DivergenceValue", "ShiftDecomposition",
    "BoundCheck", "RobustnessReport", "OrthogonalityReport", "SamplingCovarianceReport",
    "ConsistencyReport", "RunManifest",
    "ExperimentConfig", "STATISTIC_MENU", "parse_vector", "parse_matrix",
]
