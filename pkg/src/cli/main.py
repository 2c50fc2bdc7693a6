import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from project_config.logger import get_logger
from src.errors import DegDiffError
from src.experiments.config import MODES, load_config
from src.experiments.runner import run_experiment
from src.experiments.writers import write_json

logger = get_logger(__name__, log_file="cli.log")

EXIT_OK = 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="degdiff",
        description="Doubly degenerate nonlinear diffusion: solver, closed-form solutions and diagnostics.",
    )
    parser.add_argument("mode", choices=MODES, help="Experiment to run; replaces the mode in the config file")
    parser.add_argument("--config", type=Path, required=True, help="Path to the YAML experiment configuration")
    parser.add_argument("--out", type=Path, default=None, help="Output directory; replaces output_dir")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted-path override such as grid.n_cells=1200 (repeatable)",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the `degdiff` command.

    :return: 0 on success, 2 for configuration or parameter errors, 3 for numerical failures,
        4 when acceptance criteria fail.
    """
    args = build_parser().parse_args(argv)
    overrides = [f"mode={args.mode}"] + list(args.override)
    try:
        config = load_config(args.config, overrides=overrides, output_dir=str(args.out) if args.out else None)
    except DegDiffError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"degdiff: error: {e}", file=sys.stderr)
        if args.out is not None:
            write_json(
                args.out / "summary.json",
                {"mode": args.mode, "status": "failed", "error": e.to_dict(), "exit_status": e.exit_status},
            )
        return e.exit_status

    result = run_experiment(config)
    if result.exit_status != EXIT_OK:
        error = result.summary.get("error", {})
        print(f"degdiff: {args.mode} failed: {error.get('message', 'see summary.json')}", file=sys.stderr)
    else:
        print(f"degdiff: {args.mode} finished, artifacts in {result.output_dir}")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
