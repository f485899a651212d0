# isostokes/infrastructure/monitoring.py
from __future__ import annotations
import time
import psutil
from typing import Dict, Any, Optional
from dataclasses import dataclass
import logging
import threading

logger = logging.getLogger(__name__)

@dataclass
class ResourceUsage:
    """Timings and memory of one command run."""
    wall_seconds: float = 0.0
    cpu_seconds: float = 0.0
    peak_rss_mb: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "wall_seconds": self.wall_seconds,
            "cpu_seconds": self.cpu_seconds,
            "peak_rss_mb": self.peak_rss_mb,
        }

class _RSSSampler(threading.Thread):
    """Background thread polling the resident set size."""

    def __init__(self, process: psutil.Process, interval_seconds: float):
        super().__init__(daemon=True)
        self.process = process
        self.interval_seconds = interval_seconds
        self.peak_bytes = 0
        self._stop_event = threading.Event()

    def sample(self) -> None:
        try:
            self.peak_bytes = max(self.peak_bytes, self.process.memory_info().rss)
        except psutil.Error as e:
            logger.debug(f"RSS sample failed: {e}")

    def run(self) -> None:
        while not self._stop_event.is_set():
            self.sample()
            self._stop_event.wait(self.interval_seconds)

    def stop(self) -> None:
        self._stop_event.set()
        self.join(timeout=1.0)
        self.sample()

class ResourceMonitor:
    """
    Context manager recording wall time, process CPU time and peak RSS.

    Usage:
        with ResourceMonitor() as monitor:
            run()
        report["timings"] = monitor.usage.to_dict()
    """

    def __init__(self, enabled: bool = True, track_memory: bool = True, interval_seconds: float = 0.05):
        self.enabled = enabled
        self.track_memory = track_memory
        self.interval_seconds = interval_seconds
        self.usage = ResourceUsage()
        self._process: Optional[psutil.Process] = None
        self._sampler: Optional[_RSSSampler] = None
        self._t0 = 0.0
        self._cpu0 = 0.0

    def _cpu_time(self) -> float:
        if self._process is None:
            return 0.0
        times = self._process.cpu_times()
        return times.user + times.system

    def __enter__(self) -> "ResourceMonitor":
        self._t0 = time.perf_counter()
        if not self.enabled:
            return self
        try:
            self._process = psutil.Process()
            self._cpu0 = self._cpu_time()
            if self.track_memory:
                self._sampler = _RSSSampler(self._process, self.interval_seconds)
                self._sampler.start()
        except psutil.Error as e:
            logger.warning(f"Resource monitoring unavailable: {e}")
            self._process = None
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.usage.wall_seconds = time.perf_counter() - self._t0
        if self._process is not None:
            try:
                self.usage.cpu_seconds = self._cpu_time() - self._cpu0
            except psutil.Error as e:
                logger.debug(f"CPU time unavailable: {e}")
        if self._sampler is not None:
            self._sampler.stop()
            self.usage.peak_rss_mb = self._sampler.peak_bytes / (1024 * 1024)
        return False

def get_system_info() -> Dict[str, Any]:
    """Host summary attached to selftest reports."""
    try:
        memory = psutil.virtual_memory()
        return {
            "cpu_count": psutil.cpu_count(logical=True),
            "memory_total_mb": memory.total / (1024 * 1024),
            "memory_available_mb": memory.available / (1024 * 1024),
        }
    except Exception as e:
        logger.error(f"Failed to collect system info: {e}")
        return {}
