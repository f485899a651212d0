# isostokes/cli/commands.py
"""
Dispatch of validated jobs to the numerical modules.

Every job runs with a fresh numpy Generator seeded from ``job.seed``;
random inputs are drawn in field order, so identical jobs give identical
report payloads.
"""
from __future__ import annotations
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Tuple
import cmath
import logging
import math
import time

import numpy as np

from ..core.linalg import (
    check_hermitian,
    p_flip,
    random_hermitian,
    random_regular_point,
    random_straight_path,
)
from ..core.models import FlowOptions, ReportStatus, Side, SolverOptions, StokesOptions, StokesPair
from ..core.special import branched_log, log_gamma
from ..infrastructure.config import IsoStokesConfig, get_config
from ..infrastructure.logging_config import get_performance_logger
from ..infrastructure.monitoring import ResourceMonitor, get_system_info
from ..monodromy import connection, flow, stokes_closed, stokes_numeric
from .error_handlers import EXIT_OK, EXIT_TOLERANCE, handle_exception, status_for
from .schemas import (
    ConnectFlowJob,
    ConnectSolveJob,
    EvolveJob,
    ExtractJob,
    PVIParamsJob,
    Report,
    SeedJob,
    SelftestJob,
    StokesClosedJob,
    StokesNumJob,
    VerifyConnectionJob,
)
from .serialization import decode_complex, decode_matrix, to_jsonable

logger = logging.getLogger(__name__)

Outcome = Tuple[Dict[str, Any], Dict[str, Any], int]

class CommandRunner:
    """Runs one job under a per-job configuration."""

    def __init__(self, job: Any, config: IsoStokesConfig):
        self.job = job
        self.config = config
        self.rng = np.random.default_rng(job.seed)
        self.flow_opts = FlowOptions.from_config(config)
        self.stokes_opts = StokesOptions.from_config(config)
        self.solver_opts = SolverOptions.from_config(config)
        self.environment: Dict[str, Any] = {}   # host values, reported under timings

    # -- inputs -------------------------------------------------------------

    def matrix(self, value: Any) -> np.ndarray:
        if hasattr(value, "random"):
            return random_hermitian(self.rng, value.random.n, value.random.norm)
        return check_hermitian(decode_matrix(value), self.config.numerics.hermit_tol)

    def coordinates(self, value: Any) -> np.ndarray:
        if hasattr(value, "random"):
            spec = value.random
            return random_regular_point(self.rng, spec.n, (spec.gap_min, spec.gap_max), spec.start)
        return np.asarray(value, dtype=float)

    def waypoints(self, value: Any, samples: int) -> List[np.ndarray]:
        if hasattr(value, "random"):
            spec = value.random
            corners = list(random_straight_path(self.rng, spec.n, spec.length, (spec.gap_min, spec.gap_max), spec.start))
        else:
            corners = [np.asarray(w, dtype=float) for w in value]
        points = [corners[0]]
        for a, b in zip(corners[:-1], corners[1:]):
            for s in np.linspace(0.0, 1.0, samples)[1:]:
                points.append(a + s * (b - a))
        return points

    # -- commands -----------------------------------------------------------

    def run_seed(self, job: SeedJob) -> Outcome:
        A = self.matrix(job.A)
        kwargs = {"rho_min": self.flow_opts.rho_min, "hermit_tol": self.flow_opts.hermit_tol}
        if job.zone is Side.MINUS and job.direct:
            s = flow.seed_minus_direct(A, job.rho, **kwargs)
        else:
            s = flow.seed(A, job.rho, job.zone, **kwargs)
        inv = flow.flow_invariants(s.phi)
        diagnostics = {
            "spectrum_drift": float(np.abs(inv["spectrum"] - flow.flow_invariants(A)["spectrum"]).max()),
            "diagonal_drift": float(np.abs(inv["diagonal"] - np.real(np.diag(A))).max()),
        }
        return {"zone": s.zone, "rho": s.rho, "u": s.point.u, "phi": s.phi, "A": A}, diagnostics, EXIT_OK

    def run_extract(self, job: ExtractJob) -> Outcome:
        phi = self.matrix(job.phi)
        point = flow.regular_point(self.coordinates(job.u), self.flow_opts.gap_floor)
        A = flow.extract(
            phi, point, job.zone,
            fp_tol=self.flow_opts.fp_tol,
            max_iter=self.flow_opts.fp_max_iter,
            hermit_tol=self.flow_opts.hermit_tol,
        )
        return {"zone": job.zone, "u": point.u, "phi": phi, "A": A}, {}, EXIT_OK

    def run_evolve(self, job: EvolveJob) -> Outcome:
        phi = self.matrix(job.phi)
        path = flow.make_path(self.waypoints(job.path, job.samples), self.flow_opts.gap_floor)
        fo = self.flow_opts
        trajectory = flow.integrate_path(
            phi, path,
            tol=fo.tol, gap_floor=fo.gap_floor, max_steps=fo.max_steps,
            h_min_fraction=fo.h_min_fraction, hermit_tol=fo.hermit_tol,
        )
        results: Dict[str, Any] = {
            "final_u": trajectory.final_point.u,
            "final_phi": trajectory.final_phi,
            "samples": [{"t": s.t, "u": s.point.u, "phi": s.phi} for s in trajectory.samples],
        }
        diagnostics = trajectory.summary()
        if job.check_stokes:
            pairs = [connection.stokes_of_solution(s.phi, s.point, self.stokes_opts, self.flow_opts)
                     for s in trajectory.samples]
            ref = pairs[0].S_plus
            diagnostics["stokes_variation"] = max(
                float(np.linalg.norm(p.S_plus - ref)) / float(np.linalg.norm(ref)) for p in pairs
            )
            results["S_plus"] = ref
            results["S_minus"] = pairs[0].S_minus
        return results, diagnostics, EXIT_OK

    def run_stokes_num(self, job: StokesNumJob) -> Outcome:
        A = self.matrix(job.A)
        u = self.coordinates(job.u)
        opts = replace(self.stokes_opts, anchor_radius=job.anchor_radius)
        system = stokes_numeric.linear_system(u, A, self.config.numerics.gap_floor, self.config.numerics.hermit_tol)
        pair = stokes_numeric.stokes_numeric(system, opts)
        S_plus, S_minus = stokes_numeric.stokes_pair_in_original_frame(pair)
        results: Dict[str, Any] = {
            "u": u,
            "A": A,
            "sigma": list(pair.sigma),
            "S_plus": pair.S_plus,
            "S_minus": pair.S_minus,
            "S_plus_original_frame": S_plus,
            "S_minus_original_frame": S_minus,
        }
        if job.canonical:
            values = []
            for point in job.canonical:
                z = decode_complex(point.z)
                F, err = stokes_numeric.canonical_eval(system, z, point.which, opts, point.arg)
                values.append({"z": z, "which": point.which, "arg": point.arg, "F": F, "error_estimate": err})
            results["canonical"] = values
        diagnostics = {
            **pair.diagnostics,
            "triangularity_defect": pair.triangularity_defect,
            "dagger_defect": pair.dagger_defect,
            "monodromy_defect": stokes_numeric.monodromy_defect(pair, system.A),
        }
        return results, diagnostics, EXIT_OK

    def _numeric_for_zone(self, A: np.ndarray, rho: float, zone: Side) -> StokesPair:
        s = flow.seed(A, rho, zone, rho_min=self.flow_opts.rho_min, hermit_tol=self.flow_opts.hermit_tol)
        return connection.stokes_of_solution(s.phi, s.point, self.stokes_opts, self.flow_opts)

    def run_stokes_closed(self, job: StokesClosedJob) -> Outcome:
        A = self.matrix(job.A)
        if job.zone is Side.PLUS:
            sub = stokes_closed.closed_subdiagonals(A, job.convention)
            pattern = stokes_closed.gt_pattern(A)
        else:
            sub = stokes_closed.transform_minus(stokes_closed.closed_subdiagonals(p_flip(A), job.convention))
            pattern = stokes_closed.gt_pattern(p_flip(A))
        results: Dict[str, Any] = {
            "zone": job.zone,
            "convention": job.convention,
            "s_plus": sub.s_plus,
            "s_minus": sub.s_minus,
            "gt_levels": list(pattern.levels),
            "gt_extensions": list(pattern.extensions),
        }
        diagnostics: Dict[str, Any] = {
            "conjugation_defect": float(np.abs(sub.s_minus - np.conj(sub.s_plus)).max(initial=0.0)),
        }
        if job.compare_rho is not None and A.shape[0] > 1:
            numeric = stokes_closed.subdiagonals_of(self._numeric_for_zone(A, job.compare_rho, job.zone))
            scale = max(float(np.abs(numeric.s_plus).max()), 1e-300)
            diagnostics["numeric_s_plus"] = numeric.s_plus
            diagnostics["closed_form_error"] = float(np.abs(numeric.s_plus - sub.s_plus).max()) / scale
        return results, diagnostics, EXIT_OK

    def run_connect_flow(self, job: ConnectFlowJob) -> Outcome:
        A = self.matrix(job.A)
        if job.direction is Side.PLUS:
            out = connection.connect_via_flow(A, job.rho, job.tol, self.flow_opts)
            results = {"A_inf": A, "A_minus_inf": out}
        else:
            out = connection.connect_back_via_flow(A, job.rho, job.tol, self.flow_opts)
            results = {"A_minus_inf": A, "A_inf": out}
        before, after = flow.flow_invariants(A), flow.flow_invariants(out)
        diagnostics = {
            "spectrum_drift": float(np.abs(before["spectrum"] - after["spectrum"]).max()),
            "diagonal_drift": float(np.abs(before["diagonal"] - after["diagonal"]).max()),
        }
        return results, diagnostics, EXIT_OK

    def run_connect_solve(self, job: ConnectSolveJob) -> Outcome:
        A = self.matrix(job.A_inf)
        if job.initial_guess is not None:
            guess = self.matrix(job.initial_guess)
        else:
            guess = connection.connect_via_flow(A, job.rho, flow=self.flow_opts)
        result = connection.connect_via_stokes(A, guess, job.rho, self.solver_opts, self.stokes_opts, self.flow_opts)
        results = {
            "A_inf": A,
            "initial_guess": guess,
            "A_minus_inf": result.A_minus_inf,
            "residual": result.residual,
        }
        diagnostics = {
            "initial_residual": result.initial_residual,
            "evaluations": result.evaluations,
            "solver_status": result.status,
            "solver_target": result.target,
            "solver_message": result.message,
            "distance_from_guess": float(np.linalg.norm(result.A_minus_inf - guess)),
        }
        return results, diagnostics, EXIT_OK

    def run_verify_connection(self, job: VerifyConnectionJob) -> Outcome:
        A = self.matrix(job.A_inf)
        if job.A_minus_inf is not None:
            B = self.matrix(job.A_minus_inf)
        else:
            B = connection.connect_via_flow(A, job.rho, flow=self.flow_opts)
        report = connection.verify_connection(A, B, job.rho, job.tol, self.stokes_opts, self.flow_opts)
        results = {
            "A_inf": A,
            "A_minus_inf": B,
            "residual": report.residual,
            "relative_residual": report.relative_residual,
            "passed": report.passed,
            "S_plus": report.stokes_from_plus.S_plus,
            "flipped_S_minus": p_flip(report.stokes_from_minus.S_minus),
            "closed_form_error": report.closed_form_error,
        }
        exit_code = EXIT_OK if report.passed else EXIT_TOLERANCE
        return results, dict(report.diagnostics), exit_code

    def run_pvi_params(self, job: PVIParamsJob) -> Outcome:
        phi = self.matrix(job.phi)
        point = flow.regular_point(self.coordinates(job.u), self.flow_opts.gap_floor)
        params = connection.pvi_parameters(phi, point, self.config.numerics.eig_tol)
        return params.to_dict(), {}, EXIT_OK

    def run_selftest(self, job: SelftestJob) -> Outcome:
        checks = run_selftest_checks(self.stokes_opts)
        passed = all(c["passed"] for c in checks)
        self.environment["system"] = get_system_info()
        return {"checks": checks, "passed": passed}, {}, EXIT_OK if passed else EXIT_TOLERANCE

    def run(self) -> Outcome:
        handler: Callable[[Any], Outcome] = getattr(self, "run_" + self.job.command.replace("-", "_"))
        return handler(self.job)

def run_selftest_checks(opts: Optional[StokesOptions] = None) -> List[Dict[str, Any]]:
    """Small exact cases of every module; each entry has name, error and passed."""
    opts = opts or StokesOptions()
    checks: List[Dict[str, Any]] = []

    def check(name: str, error: float, tol: float) -> None:
        checks.append({"name": name, "error": error, "tolerance": tol, "passed": bool(error <= tol)})

    check("log_gamma(1) = 0", abs(log_gamma(1.0)), 1e-13)
    check("log_gamma(1/2) = log(sqrt(pi))", abs(log_gamma(0.5) - 0.5 * math.log(math.pi)), 1e-13)
    check("branched_log(-1) = -i pi", abs(branched_log(-1.0) + 1j * math.pi), 1e-15)

    A = np.diag([0.3, -0.2, 0.5]).astype(complex)
    system = stokes_numeric.linear_system([0.0, 1.0, 2.5], A)
    pair = stokes_numeric.stokes_numeric(system, opts)
    expected = np.diag(np.exp(np.real(np.diag(A)) / 2))
    check("diagonal A: S_plus = e^{[A]/2}", float(np.abs(pair.S_plus - expected).max()), 1e-8)
    check("diagonal A: S_minus = e^{[A]/2}", float(np.abs(pair.S_minus - expected).max()), 1e-8)

    scalar = stokes_numeric.linear_system([0.7], np.array([[0.4]]))
    F, _ = stokes_numeric.canonical_eval(scalar, -1.0, Side.MINUS, opts)
    check("scalar F_minus(-1)", abs(F[0, 0] - cmath.exp(-0.7j) * math.exp(0.2)), 1e-8)

    pattern = stokes_closed.gt_pattern(np.diag([1.0, 2.0, 3.0]))
    check("GT pattern of diag(1,2,3)", float(np.abs(np.array(pattern.extensions) - [1.0, 2.0, 3.0]).max()), 1e-12)
    sub = stokes_closed.closed_subdiagonals(np.diag([1.0, 2.0, 3.0]))
    check("closed form vanishes for diagonal A", float(np.abs(sub.s_plus).max()), 0.0)

    params = connection.pvi_parameters(np.zeros((3, 3)), flow.regular_point([0.0, 1.0, 2.0]))
    check("PVI at phi = 0", abs(params.alpha - 0.5) + abs(params.x - 0.5), 1e-15)

    seeded = flow.seed_plus(np.diag([0.1, 0.2]), 100.0)
    check("diagonal seed is constant", float(np.abs(seeded.phi - np.diag([0.1, 0.2])).max()), 1e-15)
    return checks

def run_command(job: Any, base_config: Optional[IsoStokesConfig] = None) -> Report:
    """
    Execute a validated job and build its report.

    Library exceptions become error reports with their exit code; the
    report's ``timings`` block holds the only non-deterministic values.
    """
    base = base_config or get_config()
    started = time.perf_counter()
    job_id = job.job_id
    results: Dict[str, Any] = {}
    diagnostics: Dict[str, Any] = {}
    environment: Dict[str, Any] = {}
    error = None
    exit_code = EXIT_OK

    monitor = ResourceMonitor(enabled=base.monitoring.enabled, track_memory=base.monitoring.track_memory)
    with monitor:
        try:
            config = base.with_overrides(job.settings.as_overrides())
            runner = CommandRunner(job, config)
            environment = runner.environment
            results, diagnostics, exit_code = runner.run()
        except Exception as e:
            exit_code, error = handle_exception(e, job_id)

    if error is not None:
        status = status_for(exit_code)
    elif exit_code != EXIT_OK:
        status = ReportStatus.TOLERANCE_FAILED
    else:
        status = ReportStatus.SUCCESS

    get_performance_logger().log_command(job_id or "-", job.command, time.perf_counter() - started, exit_code)
    return Report(
        schema_version=base.schema_version,
        version=base.version,
        job_id=job_id,
        command=job.command,
        status=status,
        exit_code=exit_code,
        config=job.model_dump(mode="json"),
        results=to_jsonable(results),
        diagnostics=to_jsonable(diagnostics),
        timings={**monitor.usage.to_dict(), **to_jsonable(environment)},
        error=error,
    )
