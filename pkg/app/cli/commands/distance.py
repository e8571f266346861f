from app.cli.commands import CommandOutput
from app.cli.deps import get_theta
from app.core.exceptions import InvalidInput
from app.schemas.experiment import ExperimentConfig
from app.services.divergence_service import divergence_service

NAME = "distance"
HELP = "Closed-form squared W2 between two elliptical models; writes a JSON DivergenceValue"
COLUMNS = []


def add_arguments(parser):
    parser.add_argument("--mu1", dest="mu", help="first location, e.g. 0,0")
    parser.add_argument("--lam1", dest="lam", help="first Λ, e.g. I or 2,1;1,2")
    parser.add_argument("--mu2", help="second location")
    parser.add_argument("--lam2", help="second Λ")


def handle(config: ExperimentConfig) -> CommandOutput:
    if len(config.mu) != len(config.mu2):
        raise InvalidInput(f"μ₁ has {len(config.mu)} entries, μ₂ has {len(config.mu2)}")
    d = len(config.mu)
    theta1 = get_theta(config, d)
    theta2 = get_theta(config, d, second=True)
    return CommandOutput(payload=divergence_service.gelbrich_w2(theta1, theta2))
