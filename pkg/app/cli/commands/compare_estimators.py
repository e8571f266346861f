from app.cli.commands import CommandOutput
from app.cli.deps import get_dim, get_shape, get_theta
from app.schemas.experiment import ExperimentConfig
from app.schemas.reports import EstimatorMethod
from app.services.efficiency_service import efficiency_service

NAME = "compare-estimators"
HELP = "Sampling variance of each estimator against the Fisher bound g_F⁻¹/n"
COLUMNS = ["method", "n", "replications", "failed", "param", "sampling_var", "fisher_bound", "efficiency"]


def add_arguments(parser):
    parser.add_argument("--methods", help="comma list of w, mle, wp1d (default w,mle)")


def handle(config: ExperimentConfig) -> CommandOutput:
    d = get_dim(config)
    theta = get_theta(config, d)
    shape = get_shape(config, d)
    reports = efficiency_service.efficiency_comparison(
        config.methods, theta, shape, config.n, config.replications, config.seed
    )
    rows = []
    for report in reports:
        for a, param in enumerate(report.params):
            variance = report.covariance[a][a]
            bound = report.fisher_bound[a][a] if report.fisher_bound is not None else None
            rows.append({
                "method": EstimatorMethod(report.method).value,
                "n": report.n,
                "replications": report.replications,
                "failed": report.failed,
                "param": param,
                "sampling_var": variance,
                "fisher_bound": bound,
                "efficiency": bound / variance if bound is not None and variance > 0 else None,
            })
    return CommandOutput(rows=rows, columns=COLUMNS)
