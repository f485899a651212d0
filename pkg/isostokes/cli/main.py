# isostokes/cli/main.py
"""
Command-line entry point.

Usage:
    python -m isostokes --config job.json [--out report.json] [--seed N] [--verbose]
    python -m isostokes --config batch.json --batch --out reports/ --workers 4
    python -m isostokes --print-schema
"""
from __future__ import annotations
from pathlib import Path
from typing import List, Optional
import argparse
import json
import logging
import sys

from ..core.errors import SchemaViolation
from ..infrastructure.config import get_config, get_config_summary
from ..infrastructure.logging_config import setup_logging
from .batch import run_batch
from .commands import run_command
from .error_handlers import EXIT_SCHEMA, handle_exception, status_for
from .schemas import Report, is_batch, job_schema, parse_batch, parse_config
from .serialization import dumps, write_atomic

logger = logging.getLogger(__name__)

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isostokes",
        description="Isomonodromy flow, Stokes matrices and the connection between caterpillar zones",
    )
    parser.add_argument("--config", type=Path, help="Job (or batch) configuration, JSON")
    parser.add_argument("--out", type=Path, help="Report file; a directory in batch mode (default: stdout / reports/)")
    parser.add_argument("--seed", type=int, help="Override the job seed for random inputs")
    parser.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    parser.add_argument("--print-schema", action="store_true", help="Print the job and report JSON schemas and exit")
    parser.add_argument("--batch", action="store_true", help="Treat the configuration as a batch with a jobs list")
    parser.add_argument("--workers", type=int, default=1, help="Worker processes in batch mode (default: 1)")
    return parser

def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text)

def _error_report(exc: BaseException, command: str) -> Report:
    config = get_config()
    exit_code, error = handle_exception(exc)
    return Report(
        schema_version=config.schema_version,
        version=config.version,
        command=command,
        status=status_for(exit_code),
        exit_code=exit_code,
        error=error,
    )

def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(verbose=args.verbose)
    _, issues = get_config().validate_configuration()
    for issue in issues:
        logger.warning(f"Configuration: {issue}")
    logger.debug(f"Configuration summary: {get_config_summary()}")

    if args.print_schema:
        _emit(json.dumps(job_schema(), indent=2) + "\n", args.out)
        return 0
    if args.config is None:
        build_parser().error("--config is required unless --print-schema is given")

    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot read {args.config}: {e}")
        return EXIT_SCHEMA

    batch = job = None
    try:
        if args.batch or is_batch(text):
            batch = parse_batch(text)
        else:
            job = parse_config(text)
    except SchemaViolation as e:
        report = _error_report(e, "<invalid>")
        _emit(dumps(report), args.out)
        return report.exit_code

    if batch is not None:
        if args.seed is not None:
            batch = batch.model_copy(update={"jobs": [j.model_copy(update={"seed": args.seed}) for j in batch.jobs]})
        try:
            worst, index = run_batch(batch, args.out or Path("reports"), max(1, args.workers))
        except Exception as e:
            report = _error_report(e, "<batch>")
            sys.stdout.write(dumps(report))
            return report.exit_code
        sys.stdout.write(dumps({"reports": index}))
        return worst

    if args.seed is not None:
        job = job.model_copy(update={"seed": args.seed})
    report = run_command(job)
    _emit(dumps(report), args.out)
    return report.exit_code

if __name__ == "__main__":
    sys.exit(main())
