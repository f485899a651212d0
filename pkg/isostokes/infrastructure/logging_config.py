# isostokes/infrastructure/logging_config.py
from __future__ import annotations
import logging
import logging.handlers
import sys
import json
from pathlib import Path
from typing import Any, Dict, Optional
from datetime import datetime, timezone

from .config import IsoStokesConfig, LogLevel, get_config

_RESERVED_ATTRS = frozenset([
    "name", "msg", "args", "created", "filename", "funcName", "levelname", "levelno",
    "lineno", "module", "msecs", "message", "pathname", "process", "processName",
    "relativeCreated", "thread", "threadName", "exc_info", "exc_text", "stack_info",
    "taskName",
])

class JSONFormatter(logging.Formatter):
    """One JSON object per record; numpy scalars and arrays fall back to str."""

    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "source": f"{record.module}.{record.funcName}:{record.lineno}",
        }
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        # job_id, command, metric_type and the other extra fields
        entry.update({
            key: value for key, value in vars(record).items()
            if key not in _RESERVED_ATTRS and not key.startswith("_")
        })
        return json.dumps(entry, default=str)

class ContextFilter(logging.Filter):
    """Add service name and version to log records."""

    def __init__(self, service_name: str, version: str):
        super().__init__()
        self.service_name = service_name
        self.version = version

    def filter(self, record: logging.LogRecord) -> bool:
        record.service_name = self.service_name
        record.service_version = self.version
        return True

def setup_logging(verbose: bool = False, config: Optional[IsoStokesConfig] = None) -> None:
    """
    Set up logging for isostokes.

    Console output goes to stderr so reports written to stdout stay clean.
    ``verbose`` lowers the level to DEBUG regardless of the configured level.
    """
    config = config or get_config()
    level = LogLevel.DEBUG.value if verbose else config.logging.level.value

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    if config.logging.json_logging:
        console_handler.setFormatter(JSONFormatter())
    else:
        console_handler.setFormatter(logging.Formatter(config.logging.format, datefmt="%Y-%m-%d %H:%M:%S"))
    console_handler.addFilter(ContextFilter(service_name=config.service_name, version=config.version))
    root_logger.addHandler(console_handler)

    if config.logging.log_to_file:
        _setup_file_logging(root_logger, config, level)

    _configure_library_loggers()

    logging.getLogger(__name__).debug(
        f"Logging configured - Level: {level}, JSON: {config.logging.json_logging}, "
        f"File: {config.logging.log_to_file}"
    )

def _setup_file_logging(root_logger: logging.Logger, config: IsoStokesConfig, level: str) -> None:
    """Rotating JSON file log."""
    log_file = Path(config.logging.log_file_path)
    log_file.parent.mkdir(parents=True, exist_ok=True)

    file_handler = logging.handlers.RotatingFileHandler(
        filename=log_file,
        maxBytes=config.logging.log_file_max_bytes,
        backupCount=config.logging.log_file_backup_count,
        encoding="utf-8"
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(JSONFormatter())
    file_handler.addFilter(ContextFilter(service_name=config.service_name, version=config.version))
    root_logger.addHandler(file_handler)

def _configure_library_loggers() -> None:
    """Reduce noise from third-party libraries."""
    for logger_name in ("concurrent.futures", "asyncio", "numba"):
        logging.getLogger(logger_name).setLevel(logging.WARNING)

class PerformanceLogger:
    """Structured timing and quality records for the numerical stages."""

    def __init__(self, logger_name: str = "isostokes.performance"):
        self.logger = logging.getLogger(logger_name)

    def log_integration(self, label: str, duration_seconds: float, accepted_steps: int,
                        rejected_steps: int, max_error: float) -> None:
        self.logger.info(
            f"Integration finished: {label}",
            extra={
                "label": label,
                "duration_seconds": duration_seconds,
                "accepted_steps": accepted_steps,
                "rejected_steps": rejected_steps,
                "max_error_estimate": max_error,
                "metric_type": "integration"
            }
        )

    def log_stokes(self, n: int, duration_seconds: float, anchor_radius: float,
                   series_order: int, triangularity_defect: float) -> None:
        self.logger.info(
            "Stokes matrices computed",
            extra={
                "n": n,
                "duration_seconds": duration_seconds,
                "anchor_radius": anchor_radius,
                "series_order": series_order,
                "triangularity_defect": triangularity_defect,
                "metric_type": "stokes"
            }
        )

    def log_solver(self, iterations: int, residual: float, converged: bool) -> None:
        self.logger.info(
            f"Least-squares solve {'converged' if converged else 'stopped'}",
            extra={
                "iterations": iterations,
                "residual": residual,
                "converged": converged,
                "metric_type": "solver"
            }
        )

    def log_command(self, job_id: str, command: str, duration_seconds: float, exit_code: int) -> None:
        level = logging.INFO if exit_code == 0 else logging.WARNING
        self.logger.log(
            level,
            f"Command {command} finished with exit code {exit_code}",
            extra={
                "job_id": job_id,
                "command": command,
                "duration_seconds": duration_seconds,
                "exit_code": exit_code,
                "metric_type": "command"
            }
        )

def get_performance_logger() -> PerformanceLogger:
    """Get performance logger instance."""
    return PerformanceLogger()
