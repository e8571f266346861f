"""Experiment runner: parses flags or a JSON config, runs one subcommand, writes results and a manifest."""
import argparse
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.cli.commands import (
    bounds,
    compare_estimators,
    distance,
    estimate,
    robustness,
    verify_score,
    verify_shapes,
)
from app.core.config import settings
from app.core.exceptions import InvalidInput, WasserstatError
from app.models.shape import ShapeKind
from app.schemas.experiment import ExperimentConfig
from app.schemas.reports import RunManifest
from app.services.export_service import export_service

logger = logging.getLogger(__name__)

COMMANDS = {
    module.NAME: module
    for module in (verify_score, estimate, compare_estimators, robustness, bounds, distance, verify_shapes)
}
LIST_FIELDS = ("sigma2", "statistics", "methods")


def _shared_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, argument_default=None)
    parent.add_argument("--config", help="JSON config file; flags override its values")
    parent.add_argument("--shape", choices=[k.value for k in ShapeKind], help="waveform family")
    parent.add_argument("--nu", type=float, help="student-t degrees of freedom (> 2)")
    parent.add_argument("--dim", type=int, help="dimension d")
    parent.add_argument("--mu", help="location, comma list")
    parent.add_argument("--lam", help="Λ, I or rows like 2,1;1,2")
    parent.add_argument("--theta-seed", type=int, help="draw a random θ from this seed")
    parent.add_argument("--n", type=int, help="sample size")
    parent.add_argument("--replications", type=int, help="independent datasets per estimator")
    parent.add_argument("--sigma2", help="comma list of noise variances")
    parent.add_argument("--seed", type=int, help="master seed")
    parent.add_argument("--output", help="result file (default results/<command>.<format>)")
    parent.add_argument("--format", choices=["csv", "json"], help="result format for table commands")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Wasserstein statistics on elliptical location-scatter models",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = _shared_flags()
    for name, module in COMMANDS.items():
        epilog = f"columns: {','.join(module.COLUMNS)}" if module.COLUMNS else "writes a single JSON object"
        sub = subparsers.add_parser(name, parents=[parent], help=module.HELP, description=module.HELP, epilog=epilog)
        module.add_arguments(sub)
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise InvalidInput(f"config file not found: {path}")
        try:
            values = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InvalidInput(f"config file is not valid JSON: {e}")
        if not isinstance(values, dict):
            raise InvalidInput("config file must hold a JSON object")

    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    for key in LIST_FIELDS:
        if isinstance(flags.get(key), str):
            flags[key] = [p for p in flags[key].replace(" ", "").split(",") if p]
    values.update(flags)
    return ExperimentConfig(**values)


def run_config(config: ExperimentConfig) -> List[Path]:
    """Run one validated config; returns the result file and manifest paths."""
    started_at = datetime.now(timezone.utc).isoformat()
    start = time.perf_counter()
    module = COMMANDS[config.command]
    logger.info(f"Running {config.command} (seed {config.seed})")
    result = module.handle(config)

    fmt = "json" if result.payload is not None else config.format
    output = Path(config.output) if config.output else export_service.default_output(config.command, fmt)
    if result.payload is not None:
        export_service.write_json(output, result.payload)
    elif fmt == "json":
        export_service.write_json(output, result.rows)
    else:
        export_service.write_table(output, result.rows, result.columns)

    manifest = RunManifest(
        command=config.command,
        config=config.model_dump(mode="json"),
        seed=config.seed,
        versions=export_service.package_versions(),
        started_at=started_at,
        wall_time_seconds=time.perf_counter() - start,
        outputs=[str(output)],
    )
    manifest_file = export_service.write_manifest(output, manifest)
    return [output, manifest_file]


def run(argv: Optional[List[str]] = None) -> int:
    """Parse, validate and run; returns the process exit code (0, 1 or 2)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse usage errors count as invalid config
        return 0 if e.code in (0, None) else 1
    try:
        config = _load_config(args)
        run_config(config)
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"]) or "config"
            print(f"InvalidInput: {location}: {error['msg']}", file=sys.stderr)
        return 1
    except WasserstatError as e:
        logger.error(f"{args.command} failed: {e.name}")
        print(f"{e.name}: {e}", file=sys.stderr)
        return e.exit_code
    return 0
