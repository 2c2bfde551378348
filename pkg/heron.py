#!/usr/bin/env python3
"""
Heron: reflection and characteristic functions in oriented line space.

Usage:
    python3 heron.py run scenes/plane.scene [--verify] [--grid 16] [--tol 1e-10] [--verbose]
    python3 heron.py selftest [--verbose]

CSV goes to standard output; logs and selftest verdicts go to standard error.
"""
import argparse
import logging
import sys
from pathlib import Path

from exceptions import ParseError
from services.scene_parser import parse_scene
from services.scene_runner import SceneRunner
from services.selftest import run_selftest
from settings import get_settings

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool):
    level = logging.DEBUG if verbose else getattr(logging, get_settings().log_level.upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def run_command(args) -> int:
    """Parse a scene file and write its CSV table to stdout."""
    path = Path(args.scene)
    if not path.exists():
        logger.error(f"Scene file not found: {path}")
        return 2
    try:
        scene = parse_scene(path.read_text(encoding="utf-8"))
    except ParseError as e:
        logger.error(f"{path}: {e}")
        return 2

    overrides = {}
    grid = args.grid if args.grid is not None else scene.options.grid
    tol = args.tol if args.tol is not None else scene.options.tol
    if grid is not None:
        overrides["grid_size"] = grid
    if tol is not None:
        overrides["accept_tol"] = tol
    settings = get_settings().model_copy(update=overrides)
    verify = args.verify or scene.options.verify

    logger.info(f"Running {len(scene.queries)} queries from {path}")
    try:
        runner = SceneRunner(scene, sys.stdout, settings, verify)
    except ParseError as e:
        logger.error(f"{path}: {e}")
        return 2
    return runner.run()


def main(argv=None) -> int:
    """Main entry point."""
    parser = argparse.ArgumentParser(
        description='Reflection in oriented line space and Hamilton characteristic functions'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    run_parser = subparsers.add_parser('run', help='Evaluate the queries of a scene file')
    run_parser.add_argument('scene', help='Path to the scene file')
    run_parser.add_argument('--verify', action='store_true', help='Cross-check values against the vector oracle')
    run_parser.add_argument('--grid', type=int, default=None, help='Multistart seed grid size per side')
    run_parser.add_argument('--tol', type=float, default=None, help='Root acceptance tolerance')
    run_parser.add_argument('--verbose', action='store_true', help='Debug logging')

    selftest_parser = subparsers.add_parser('selftest', help='Run the built-in fixture table')
    selftest_parser.add_argument('--verbose', action='store_true', help='Debug logging')

    args = parser.parse_args(argv)
    if args.command == 'run':
        if args.grid is not None and args.grid <= 0:
            parser.error('--grid must be positive')
        if args.tol is not None and args.tol <= 0:
            parser.error('--tol must be positive')
    configure_logging(args.verbose)

    if args.command == 'run':
        return run_command(args)
    return run_selftest(sys.stderr)


if __name__ == '__main__':
    sys.exit(main())
