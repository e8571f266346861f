from app.cli.commands import CommandOutput
from app.cli.deps import get_shape, get_theta
from app.schemas.experiment import ExperimentConfig
from app.schemas.reports import EstimatorMethod
from app.services.estimator_service import estimator_service
from app.services.export_service import export_service

NAME = "estimate"
HELP = "Estimate θ from a headerless CSV data file; writes a JSON EstimatorReport"
COLUMNS = []


def add_arguments(parser):
    parser.add_argument("--method", choices=[m.value for m in EstimatorMethod], help="w | mle | wp1d")
    parser.add_argument("--data", help="headerless CSV, one observation per row")
    parser.add_argument("--tol", type=float, help="MLE gradient tolerance")
    parser.add_argument("--max-iter", type=int, help="MLE iteration cap")


def handle(config: ExperimentConfig) -> CommandOutput:
    data = export_service.read_data_csv(config.data)
    d = data.shape[1]
    method = EstimatorMethod(config.method)
    if method is EstimatorMethod.WMOMENT:
        return CommandOutput(payload=estimator_service.w_estimate(data))
    shape = get_shape(config, d)
    if method is EstimatorMethod.MLE:
        init = get_theta(config, d) if config.mu is not None else None
        report = estimator_service.mle_estimate(data, shape, init=init, tol=config.tol, max_iter=config.max_iter)
    else:
        report = estimator_service.wp_estimate_1d(data, shape)
    return CommandOutput(payload=report)
