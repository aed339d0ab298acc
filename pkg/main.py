import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from middleware.error_handler import EXIT_OK, handle_exception
from models.responses import OracleResponse
from properties.config import Configuration
from services.experiment_service import run_config, run_sweep, summarize, write_report
from utils.common import canonical_json, save_json_to_file, write_csv
from utils.config_loader import load_config
from utils.constant import SWEEP_AXES
from utils.errors import ConfigurationError
from utils.oracles import ORACLES, run_oracle

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flsim",
        description="Federated-learning poisoning and defense simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_flags(p):
        p.add_argument("--config", required=True, help="experiment config (key file or JSON)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--seed", type=int, help="experiment seed (overrides the file)")
        p.add_argument("--format", choices=["csv", "json", "both"], help="report format")

    experiment_flags(sub.add_parser("run", help="run one experiment"))

    sweep = sub.add_parser("sweep", help="run one experiment per axis value")
    experiment_flags(sweep)
    sweep.add_argument("--axis", required=True, help=f"one of {', '.join(SWEEP_AXES)}")
    sweep.add_argument("--values", required=True, help="comma-separated axis values")

    oracle = sub.add_parser("oracle", help="print a brute-force reference result")
    oracle.add_argument("name", help=f"one of {', '.join(ORACLES)}")
    oracle.add_argument("fixture", help="JSON fixture file")

    validate = sub.add_parser("validate", help="parse and validate a config only")
    validate.add_argument("--config", required=True)
    validate.add_argument("--seed", type=int)
    return parser


def _load(args):
    overrides = {"seed": args.seed} if args.seed is not None else None
    return load_config(args.config, overrides)


def _destination(args, cfg) -> tuple[str, str]:
    directory = args.out or cfg.output.directory or Configuration.FLSIM_OUTPUT_DIR
    fmt = args.format or cfg.output.format or Configuration.FLSIM_FORMAT
    return directory, fmt


def cmd_run(args) -> int:
    cfg = _load(args)
    report = run_config(cfg)
    directory, fmt = _destination(args, cfg)
    write_report(report, directory, cfg.output.name, fmt)
    return EXIT_OK


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigurationError(f"Sweep values must be numbers: {text}") from e


def cmd_sweep(args) -> int:
    cfg = _load(args)
    values = _parse_values(args.values)
    frame, reports = run_sweep(cfg, args.axis, values)
    directory, fmt = _destination(args, cfg)
    name = f"{cfg.output.name}_sweep_{args.axis}"
    if fmt in ("csv", "both"):
        write_csv(frame, Path(directory) / f"{name}.csv")
    if fmt in ("json", "both"):
        save_json_to_file(
            {
                "axis": args.axis,
                "summary": summarize(values, reports),
                "experiments": [r.json_payload() for r in reports],
            },
            Path(directory) / f"{name}.json",
        )
    logger.info(f"Sweep over {args.axis} finished: {len(values)} experiment(s)")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.name not in ORACLES:
        raise ConfigurationError(f"Unknown oracle '{args.name}'; expected one of {', '.join(ORACLES)}")
    try:
        fixture = json.loads(Path(args.fixture).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read fixture {args.fixture}: {e}") from e
    result = run_oracle(args.name, fixture)
    print(canonical_json(OracleResponse(oracle=args.name, result=result).model_dump()))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"{args.config}: valid (seed {cfg.seed})")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle, "validate": cmd_validate}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, Configuration.FLSIM_LOG_LEVEL, logging.INFO),
        format=Configuration.LOG_FORMAT,
    )
    try:
        Configuration.validate_required_config()
    except ValueError as e:
        return handle_exception(ConfigurationError(str(e)))
    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        return handle_exception(e)


if __name__ == "__main__":
    sys.exit(main())
