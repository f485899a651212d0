# isostokes/cli/batch.py
from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
import logging

from ..infrastructure.config import IsoStokesConfig, get_config
from .commands import run_command
from .schemas import BatchConfig, job_adapter
from .serialization import dumps, write_atomic

logger = logging.getLogger(__name__)

def report_name(index: int, job_id: Optional[str]) -> str:
    return f"{job_id}.json" if job_id else f"job-{index:04d}.json"

def _run_one(index: int, payload: Dict[str, Any], out_dir: str, config_data: Dict[str, Any]) -> Tuple[int, int, str]:
    """Worker entry point: validate, run, write the report atomically."""
    job = job_adapter.validate_python(payload)
    report = run_command(job, IsoStokesConfig(**config_data))
    path = write_atomic(Path(out_dir) / report_name(index, job.job_id), dumps(report))
    return index, report.exit_code, str(path)

def run_batch(batch: BatchConfig,
              out_dir: Path,
              workers: int = 1,
              base_config: Optional[IsoStokesConfig] = None) -> Tuple[int, List[Dict[str, Any]]]:
    """
    Run every job of a batch, one report file per job.

    Returns:
        (largest exit code, index of written reports)
    """
    config = base_config or get_config()
    config_data = config.model_dump()
    payloads = [job.model_dump(mode="json") for job in batch.jobs]
    index: List[Dict[str, Any]] = []

    if workers <= 1:
        outcomes = [_run_one(i, p, str(out_dir), config_data) for i, p in enumerate(payloads)]
    else:
        outcomes = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, i, p, str(out_dir), config_data) for i, p in enumerate(payloads)]
            for future in as_completed(futures):
                outcomes.append(future.result())
        outcomes.sort()

    for i, exit_code, path in outcomes:
        logger.info(f"Job {i} finished with exit code {exit_code}: {path}")
        index.append({"index": i, "job_id": batch.jobs[i].job_id, "exit_code": exit_code, "report": path})
    worst = max((entry["exit_code"] for entry in index), default=0)
    return worst, index
