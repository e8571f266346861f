from app.cli.commands import CommandOutput
from app.cli.deps import get_dims, get_shapes
from app.models.shape import ShapeKind
from app.schemas.experiment import ExperimentConfig
from app.services.shape_service import shape_service

NAME = "verify-shapes"
HELP = "Monte Carlo check that every waveform has mean 0 and identity covariance"
COLUMNS = ["shape", "d", "n", "max_mean_dev", "max_cov_dev", "mean_se", "cov_se", "passed"]


def add_arguments(parser):
    pass


def handle(config: ExperimentConfig) -> CommandOutput:
    rows = []
    for d in get_dims(config, (1, 2, 3, 5)):
        for shape in get_shapes(config, d, list(ShapeKind)):
            report = shape_service.verify_standardization(shape, config.n, config.seed)
            rows.append({
                "shape": report.shape,
                "d": report.dim,
                "n": report.n,
                "max_mean_dev": report.max_mean_dev,
                "max_cov_dev": report.max_cov_dev,
                "mean_se": report.mean_se,
                "cov_se": report.cov_se,
                "passed": report.passed,
            })
    return CommandOutput(rows=rows, columns=COLUMNS)
