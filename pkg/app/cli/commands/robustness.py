import numpy as np

from app.cli.commands import CommandOutput
from app.cli.deps import get_dim, get_shape, get_theta
from app.schemas.experiment import ExperimentConfig
from app.services.efficiency_service import efficiency_service

NAME = "robustness"
HELP = "Variance increase under additive noise against the W-covariance"
COLUMNS = ["statistic", "entry", "slope", "correction", "slope_minus_correction", "var_w", "std_error", "z_score"]


def add_arguments(parser):
    parser.add_argument("--statistics", help="comma list from linear, scaled_linear, square, cube, wscores")


def handle(config: ExperimentConfig) -> CommandOutput:
    d = get_dim(config)
    theta = get_theta(config, d)
    shape = get_shape(config, d)
    rows = []
    for name in config.statistics:
        stat = efficiency_service.make_statistic(name, theta)
        report = efficiency_service.noise_robustness(stat, theta, shape, config.sigma2, config.n, config.seed)
        slope, correction = np.asarray(report.slope), np.asarray(report.correction)
        var_w, std_error = np.asarray(report.var_w), np.asarray(report.std_error)
        z_scores = report.z_scores
        for a, b in zip(*np.triu_indices(stat.n_outputs)):
            rows.append({
                "statistic": name,
                "entry": f"{a + 1},{b + 1}",
                "slope": slope[a, b],
                "correction": correction[a, b],
                "slope_minus_correction": slope[a, b] - correction[a, b],
                "var_w": var_w[a, b],
                "std_error": std_error[a, b],
                "z_score": z_scores[a, b],
            })
    return CommandOutput(rows=rows, columns=COLUMNS)
