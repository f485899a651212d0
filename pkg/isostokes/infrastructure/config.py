# isostokes/infrastructure/config.py
from __future__ import annotations
from typing import Optional, List, Dict, Any, Tuple, Type
from pathlib import Path
from enum import Enum

from pydantic import Field, ConfigDict

from pydantic_settings import BaseSettings, PydanticBaseSettingsSource

class LogLevel(str, Enum):
    """Logging levels."""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"

class _InitOnlySettings(BaseSettings):
    """
    Settings base that only honours constructor arguments.

    Environment variables and dotenv files are never consulted, so a job
    config plus a seed fully determines a run.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)  # type: ignore[misc]

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

class NumericsSettings(_InitOnlySettings):
    """Dense linear algebra tolerances."""

    hermit_tol: float = Field(
        default=1e-12,
        gt=0.0,
        le=1e-3,
        description="Hermiticity tolerance relative to the Frobenius norm"
    )
    eig_tol: float = Field(default=1e-12, gt=0.0, le=1e-3, description="Eigen-decomposition residual tolerance")
    gap_floor: float = Field(
        default=1e-10,
        gt=0.0,
        description="Smallest admissible |u_i - u_j|"
    )
    jacobi_max_sweeps: int = Field(default=30, ge=1, le=200, description="Cyclic Jacobi sweep cap")
    jacobi_threshold: float = Field(
        default=1e-14,
        gt=0.0,
        le=1e-6,
        description="Off-diagonal Frobenius threshold relative to ||A||"
    )
    expm_norm_cap: float = Field(
        default=700.0,
        gt=0.0,
        description="Largest ||M|| accepted by matrix_exp"
    )
    extended_precision: bool = Field(
        default=False,
        description="Run Jacobi sweeps in numpy.clongdouble"
    )

class FlowSettings(_InitOnlySettings):
    """Isomonodromy flow integration and zone extraction."""

    tol: float = Field(default=1e-10, gt=0.0, le=1e-2, description="Integrator absolute/relative tolerance")
    rho_min: float = Field(default=10.0, gt=1.0, description="Smallest accepted zone scale rho")
    fp_tol: float = Field(default=1e-12, gt=0.0, le=1e-2, description="Fixed-point extraction tolerance")
    fp_max_iter: int = Field(default=200, ge=1, le=10000, description="Fixed-point iteration cap")
    max_steps: int = Field(default=200000, ge=10, description="Integrator step budget per segment")
    h_min_fraction: float = Field(
        default=1e-14,
        gt=0.0,
        le=1e-6,
        description="Smallest step as a fraction of the segment length"
    )

class StokesSettings(_InitOnlySettings):
    """Canonical solutions and Stokes extraction."""

    series_order: int = Field(default=12, ge=1, le=60, description="Formal series order m")
    anchor_product: float = Field(
        default=30.0,
        ge=30.0,
        description="Lower bound for R * min_gap(u)"
    )
    anchor_growth: float = Field(default=1.5, gt=1.0, le=4.0, description="R growth factor while the series defect is too large")
    anchor_max_doublings: int = Field(default=8, ge=0, le=40, description="Cap on anchor radius growth steps")
    detour_cap: float = Field(default=1.0, gt=0.0, description="Upper bound on the detour radius r")
    detour_fraction: float = Field(default=0.01, gt=0.0, lt=1.0, description="r = min(detour_cap, detour_fraction * R)")
    tol: float = Field(default=1e-11, gt=0.0, le=1e-4, description="ODE tolerance along the continuation path")
    tri_tol: float = Field(default=1e-8, gt=0.0, le=1e-2, description="Triangularity tolerance relative to ||S||")
    dagger_tol: float = Field(default=1e-6, gt=0.0, le=1e-1, description="Tolerance on ||S_- - S_+^dagger||")
    use_dagger: bool = Field(default=True, description="Set S_- = S_+^dagger instead of continuing F_-")
    max_direct_spread: float = Field(
        default=4.0,
        ge=1.0,
        description="Largest max_gap/min_gap handled without transporting the solution first"
    )
    escalation_order_step: int = Field(default=6, ge=1, le=30, description="Series order increase on retry")

class SolverSettings(_InitOnlySettings):
    """Least-squares inversion of the connection formula."""

    max_iter: int = Field(default=100, ge=1, le=10000, description="Iteration cap")
    diff_step: float = Field(default=1e-6, gt=0.0, le=1e-2, description="Finite-difference step per real parameter")
    target: float = Field(default=1e-10, gt=0.0, description="Residual accepted as converged")
    noise_factor: float = Field(
        default=1e3,
        ge=0.0,
        description="Residual floor as a multiple of the integration tolerance times ||S_+||"
    )

class LoggingSettings(_InitOnlySettings):
    """Logging configuration."""

    level: LogLevel = Field(default=LogLevel.WARNING, description="Logging level")
    format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log format string"
    )

    # File logging
    log_to_file: bool = Field(default=False, description="Enable file logging")
    log_file_path: Path = Field(
        default=Path("logs/isostokes.log"),
        description="Log file path"
    )
    log_file_max_bytes: int = Field(
        default=10485760,  # 10MB
        description="Maximum log file size"
    )
    log_file_backup_count: int = Field(default=5, description="Number of log file backups")

    # Structured logging
    json_logging: bool = Field(default=False, description="Use JSON structured logging")

class MonitoringSettings(_InitOnlySettings):
    """Resource tracking around commands."""

    enabled: bool = Field(default=True, description="Record timings in reports")
    track_memory: bool = Field(default=True, description="Record peak RSS via psutil")

class IsoStokesConfig(_InitOnlySettings):
    """Main isostokes configuration."""

    service_name: str = Field(default="isostokes", description="Service name")
    version: str = Field(default="1.0.0", description="Package version")
    schema_version: str = Field(default="1.0", description="Job/report schema version")

    numerics: NumericsSettings = Field(default_factory=NumericsSettings)
    flow: FlowSettings = Field(default_factory=FlowSettings)
    stokes: StokesSettings = Field(default_factory=StokesSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    monitoring: MonitoringSettings = Field(default_factory=MonitoringSettings)

    def with_overrides(self, overrides: Optional[Dict[str, Dict[str, Any]]]) -> "IsoStokesConfig":
        """Return a copy with per-section overrides applied (validated)."""
        if not overrides:
            return self
        data = self.model_dump()
        for section, values in overrides.items():
            if section not in data or not isinstance(data[section], dict):
                raise ValueError(f"Unknown settings section: {section}")
            data[section].update(values)
        return IsoStokesConfig(**data)

    def validate_configuration(self) -> tuple[bool, List[str]]:
        """Validate complete configuration."""
        issues = []

        if self.stokes.tol >= self.stokes.tri_tol:
            issues.append("Stokes ODE tolerance should be below the triangularity tolerance")
        if self.flow.fp_tol > self.flow.tol * 1e3:
            issues.append("Fixed-point tolerance is loose compared to the flow tolerance")
        if self.stokes.detour_fraction * self.stokes.anchor_product > self.stokes.detour_cap * 10:
            issues.append("Detour radius is large compared to the anchor radius")
        if self.numerics.extended_precision and self.logging.level == LogLevel.DEBUG:
            issues.append("Extended precision with DEBUG logging is very slow")

        return len(issues) == 0, issues

# Global configuration instance
_config: Optional[IsoStokesConfig] = None

def get_config() -> IsoStokesConfig:
    """Get global configuration instance."""
    global _config
    if _config is None:
        _config = IsoStokesConfig()
    return _config

def get_config_summary() -> Dict[str, Any]:
    """Get configuration summary for debugging."""
    config = get_config()

    return {
        "version": config.version,
        "schema_version": config.schema_version,
        "numerics": {
            "hermit_tol": config.numerics.hermit_tol,
            "gap_floor": config.numerics.gap_floor,
            "extended_precision": config.numerics.extended_precision,
        },
        "flow": {
            "tol": config.flow.tol,
            "fp_tol": config.flow.fp_tol,
        },
        "stokes": {
            "series_order": config.stokes.series_order,
            "tol": config.stokes.tol,
            "use_dagger": config.stokes.use_dagger,
        },
        "logging": {
            "level": config.logging.level.value,
            "json_logging": config.logging.json_logging,
        }
    }
