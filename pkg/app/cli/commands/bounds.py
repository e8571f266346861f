from app.cli.commands import CommandOutput
from app.cli.deps import get_dim, get_shape, get_thetas
from app.schemas.experiment import ExperimentConfig
from app.services.efficiency_service import efficiency_service

NAME = "bounds"
HELP = "Wasserstein-Cramér-Rao gap for each statistic over random θ"
COLUMNS = ["statistic", "theta_index", "min_eig_gap", "gap_std_error", "passed"]


def add_arguments(parser):
    parser.add_argument("--statistics", help="comma list from linear, scaled_linear, square, cube, wscores")
    parser.add_argument("--n-thetas", type=int, help="random θ to test (default 10)")


def handle(config: ExperimentConfig) -> CommandOutput:
    d = get_dim(config)
    shape = get_shape(config, d)
    rows = []
    for k, theta in enumerate(get_thetas(config, d)):
        for name in config.statistics:
            stat = efficiency_service.make_statistic(name, theta)
            check = efficiency_service.wcr_bound_check(stat, theta, shape, config.n, config.seed + k)
            rows.append({
                "statistic": name,
                "theta_index": k,
                "min_eig_gap": check.min_eig_gap,
                "gap_std_error": check.gap_std_error,
                "passed": check.passed,
            })
    return CommandOutput(rows=rows, columns=COLUMNS)
