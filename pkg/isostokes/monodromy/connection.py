# isostokes/monodromy/connection.py
"""
Connection between the plus and minus caterpillar zones.

A solution is labelled by A_inf (its plus-zone data) or equally by
A_minus_inf (its minus-zone data). The map between them is realized two
ways: transport along the flow, and inversion of the equality of Stokes
data S_+(A_inf) = P S_-(P A_minus_inf P) P.
"""
from __future__ import annotations
from dataclasses import replace
from typing import Any, Dict, Optional
import logging
import math
import time

import numpy as np
from scipy import optimize

from ..core.errors import InputError, NoZeroEigenvalue, NonConvergence, WrongDimension
from ..core.linalg import (
    TWO_PI_I,
    check_hermitian,
    herm_eigen,
    hermitian_to_params,
    p_flip,
    params_to_hermitian,
)
from ..core.models import (
    ConnectionReport,
    FlowOptions,
    InversionResult,
    PathInU,
    PVIParameters,
    RegularPoint,
    SolverOptions,
    StokesOptions,
    StokesPair,
)
from ..infrastructure.logging_config import get_performance_logger
from .flow import (
    extract_minus,
    extract_plus,
    integrate_path,
    minus_point,
    plus_point,
    reference_path,
    seed_minus,
    seed_plus,
)
from .stokes_closed import closed_subdiagonals, genericity_check, gt_pattern, subdiagonals_of
from .stokes_numeric import linear_system, stokes_numeric

logger = logging.getLogger(__name__)

def connection_path(rho: float, n: int, rho_min: float = 10.0) -> PathInU:
    """Straight segment from (rho, ..., rho^n) to (-rho^n, ..., -rho)."""
    if not rho > rho_min:
        raise InputError(f"rho must exceed {rho_min}, got {rho}", rho=rho, rho_min=rho_min)
    return PathInU((plus_point(rho, n), minus_point(rho, n)))

# ---------------------------------------------------------------------------
# Transport along the flow
# ---------------------------------------------------------------------------

def _flow_kwargs(flow: FlowOptions) -> Dict[str, Any]:
    return {
        "tol": flow.tol,
        "gap_floor": flow.gap_floor,
        "max_steps": flow.max_steps,
        "h_min_fraction": flow.h_min_fraction,
        "hermit_tol": flow.hermit_tol,
    }

def connect_via_flow(A_inf, rho: float, tol: Optional[float] = None,
                     flow: Optional[FlowOptions] = None) -> np.ndarray:
    """
    seed_plus at rho, integrate to the minus-zone point, extract A_minus_inf.

    Raises:
        StepSizeUnderflow: If the solution has a pole on the straight path
        FixedPointDivergence: If rho is too small for the extraction
    """
    flow = flow or FlowOptions()
    if tol is not None:
        flow = replace(flow, tol=tol)
    A = check_hermitian(A_inf, flow.hermit_tol, "A_inf")
    n = A.shape[0]
    start = seed_plus(A, rho, flow.rho_min, flow.hermit_tol)
    trajectory = integrate_path(start.phi, connection_path(rho, n, flow.rho_min), **_flow_kwargs(flow))
    A_minus = extract_minus(trajectory.final_phi, minus_point(rho, n), flow.fp_tol, flow.fp_max_iter, flow.hermit_tol)
    logger.info(
        f"Connected A_inf -> A_minus_inf along the flow (n={n}, rho={rho:g}, "
        f"{trajectory.diagnostics.accepted_steps} steps, spectrum drift {trajectory.spectrum_drift:.2e})"
    )
    return A_minus

def connect_back_via_flow(A_minus_inf, rho: float, tol: Optional[float] = None,
                          flow: Optional[FlowOptions] = None) -> np.ndarray:
    """seed_minus at rho, integrate back to the plus-zone point, extract A_inf."""
    flow = flow or FlowOptions()
    if tol is not None:
        flow = replace(flow, tol=tol)
    A = check_hermitian(A_minus_inf, flow.hermit_tol, "A_minus_inf")
    n = A.shape[0]
    start = seed_minus(A, rho, flow.rho_min, flow.hermit_tol)
    path = connection_path(rho, n, flow.rho_min).reversed()
    trajectory = integrate_path(start.phi, path, **_flow_kwargs(flow))
    return extract_plus(trajectory.final_phi, plus_point(rho, n), flow.fp_tol, flow.fp_max_iter, flow.hermit_tol)

# ---------------------------------------------------------------------------
# Stokes data of solutions
# ---------------------------------------------------------------------------

def stokes_of_solution(phi, point: RegularPoint,
                       opts: Optional[StokesOptions] = None,
                       flow: Optional[FlowOptions] = None) -> StokesPair:
    """
    Stokes pair of the isomonodromic solution through (point, phi).

    Points with gap spread above ``opts.max_direct_spread`` are first moved
    along ``reference_path`` to equally spaced coordinates; Stokes data do
    not change along the flow.
    """
    opts = opts or StokesOptions()
    flow = flow or FlowOptions(tol=opts.flow_tol, gap_floor=opts.gap_floor)
    phi = check_hermitian(phi, flow.hermit_tol, "phi")
    transported = point.spread > opts.max_direct_spread
    if transported:
        trajectory = integrate_path(phi, reference_path(point), **_flow_kwargs(flow))
        phi = trajectory.final_phi
        point = trajectory.final_point
        logger.debug(f"Transported to equally spaced point before Stokes evaluation ({trajectory.diagnostics.accepted_steps} steps)")
    pair = stokes_numeric(linear_system(point.u, phi, opts.gap_floor, flow.hermit_tol), opts)
    pair.diagnostics["transported"] = transported
    return pair

def seeded_stokes(A_inf, rho: float, opts: Optional[StokesOptions] = None,
                  flow: Optional[FlowOptions] = None) -> StokesPair:
    """Stokes pair of the plus-zone solution seeded from A_inf at rho."""
    flow = flow or FlowOptions()
    s = seed_plus(A_inf, rho, flow.rho_min, flow.hermit_tol)
    return stokes_of_solution(s.phi, s.point, opts, flow)

def compare_closed_form(A_inf, pair: StokesPair) -> Optional[float]:
    """
    Relative error between closed-form and numeric first off-diagonals of
    S_+, or None if the GT pattern of A_inf is degenerate.
    """
    A = check_hermitian(A_inf)
    if A.shape[0] < 2 or genericity_check(gt_pattern(A)) is not None:
        return None
    closed = closed_subdiagonals(A)
    numeric = subdiagonals_of(pair)
    scale = max(float(np.abs(numeric.s_plus).max()), float(np.abs(np.diag(pair.S_plus)).max()))
    return float(np.abs(closed.s_plus - numeric.s_plus).max()) / scale

def _connection_residual(S_target: np.ndarray, pair_minus_side: StokesPair) -> float:
    return float(np.linalg.norm(S_target - p_flip(pair_minus_side.S_minus)))

def verify_connection(A_inf, A_minus_inf, rho: float, tol: float = 1e-2,
                      opts: Optional[StokesOptions] = None,
                      flow: Optional[FlowOptions] = None) -> ConnectionReport:
    """
    Compare S_+ of the solution seeded from A_inf with P S_- P of the
    solution seeded from P A_minus_inf P, both at the plus-zone point.
    """
    flow = flow or FlowOptions()
    A = check_hermitian(A_inf, flow.hermit_tol, "A_inf")
    B = check_hermitian(A_minus_inf, flow.hermit_tol, "A_minus_inf")
    if A.shape != B.shape:
        raise WrongDimension(f"A_inf is {A.shape[0]}x{A.shape[0]} but A_minus_inf is {B.shape[0]}x{B.shape[0]}")
    started = time.perf_counter()
    left = seeded_stokes(A, rho, opts, flow)
    right = seeded_stokes(p_flip(B), rho, opts, flow)
    residual = _connection_residual(left.S_plus, right)
    report = ConnectionReport(
        A_inf=A,
        A_minus_inf=B,
        stokes_from_plus=left,
        stokes_from_minus=right,
        residual=residual,
        rho=rho,
        tol=tol,
        closed_form_error=compare_closed_form(A, left),
        diagnostics={
            "triangularity_defect_plus_side": left.triangularity_defect,
            "triangularity_defect_minus_side": right.triangularity_defect,
            "transported": bool(left.diagnostics.get("transported") or right.diagnostics.get("transported")),
        },
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Connection residual {report.relative_residual:.3e} relative at rho={rho:g} (tol {tol:.1e}) "
                      f"in {time.perf_counter() - started:.2f}s")
    return report

# ---------------------------------------------------------------------------
# Inversion through Stokes data
# ---------------------------------------------------------------------------

def solve_target(S_target: np.ndarray, solver: SolverOptions, opts: StokesOptions, flow: FlowOptions) -> float:
    """
    Residual accepted by connect_via_stokes.

    Both sides of the equation come out of adaptive integrations, so the
    residual map is only smooth down to the integration tolerance; the
    accepted residual is the larger of ``solver.target`` and that floor.
    """
    noise = max(opts.tol, opts.flow_tol, flow.tol) * max(1.0, float(np.linalg.norm(S_target)))
    return max(solver.target, solver.noise_factor * noise)

def connect_via_stokes(A_inf, initial_guess, rho: float,
                       solver: Optional[SolverOptions] = None,
                       opts: Optional[StokesOptions] = None,
                       flow: Optional[FlowOptions] = None) -> InversionResult:
    """
    Solve S_+(A_inf) = P S_-(P X P) P for Hermitian X by Levenberg-Marquardt
    on the n^2 real coordinates of X with a finite-difference Jacobian.

    The result meets ``solve_target``; a solve that stops above it, on
    the evaluation budget or on the optimizer's step and cost criteria,
    is an error.

    Raises:
        NonConvergence: Stopped above target; best iterate attached
    """
    solver = solver or SolverOptions()
    opts = opts or StokesOptions()
    flow = flow or FlowOptions()
    A = check_hermitian(A_inf, flow.hermit_tol, "A_inf")
    X0 = check_hermitian(initial_guess, flow.hermit_tol, "initial_guess")
    n = A.shape[0]
    if X0.shape != A.shape:
        raise WrongDimension(f"initial guess is {X0.shape[0]}x{X0.shape[0]}, expected {n}x{n}")
    S_target = seeded_stokes(A, rho, opts, flow).S_plus
    target = solve_target(S_target, solver, opts, flow)

    def residual_vector(x: np.ndarray) -> np.ndarray:
        X = params_to_hermitian(x, n)
        diff = S_target - p_flip(seeded_stokes(p_flip(X), rho, opts, flow).S_minus)
        return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

    x0 = hermitian_to_params(X0)
    r0 = float(np.linalg.norm(residual_vector(x0)))
    started = time.perf_counter()
    if r0 <= target:
        get_performance_logger().log_solver(0, r0, True)
        return InversionResult(A_minus_inf=X0, residual=r0, initial_residual=r0, evaluations=1, status=-1,
                               target=target, message="initial guess already meets the target")

    sol = optimize.least_squares(
        residual_vector,
        x0,
        method="lm",
        diff_step=solver.diff_step,
        max_nfev=solver.max_iter * (x0.size + 1),
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
    )
    X = params_to_hermitian(sol.x, n)
    residual = float(np.linalg.norm(sol.fun))
    converged = residual <= target
    get_performance_logger().log_solver(int(sol.nfev), residual, converged)
    logger.debug(f"least_squares finished in {time.perf_counter() - started:.2f}s: {sol.message}")
    if not converged:
        raise NonConvergence(
            f"connection solve stopped at residual {residual:.3e} above target {target:.3e} "
            f"after {sol.nfev} evaluations ({sol.message})",
            best=X,
            residual=residual,
            target=target,
            evaluations=int(sol.nfev),
            solver_status=int(sol.status),
        )
    return InversionResult(A_minus_inf=X, residual=residual, initial_residual=r0, evaluations=int(sol.nfev),
                           status=int(sol.status), target=target, message=str(sol.message))

# ---------------------------------------------------------------------------
# Painleve VI bridge
# ---------------------------------------------------------------------------

def pvi_parameters(phi, point: RegularPoint, eig_tol: float = 1e-10) -> PVIParameters:
    """
    Painleve VI data of a rank-3 solution value with a zero eigenvalue.

    theta_k = phi_kk / 2 pi i; the nonzero eigenvalues are
    pi i (sum theta -+ theta_inf), the larger one fixing theta_inf.

    Raises:
        WrongDimension: Unless n = 3
        NoZeroEigenvalue: If no eigenvalue is within eig_tol * max(1, ||phi||) of 0
    """
    H = check_hermitian(phi)
    if H.shape[0] != 3 or point.n != 3:
        raise WrongDimension(f"PVI parameters need n = 3, got {H.shape[0]}", n=int(H.shape[0]))
    values = herm_eigen(H).values
    zero = int(np.argmin(np.abs(values)))
    threshold = eig_tol * max(1.0, float(np.linalg.norm(H)))
    if abs(values[zero]) > threshold:
        raise NoZeroEigenvalue(
            f"smallest eigenvalue {values[zero]:.3e} exceeds {threshold:.1e}; phi is outside the PVI normalization",
            eigenvalues=values.tolist(),
        )
    mu_low, mu_high = np.delete(values, zero)
    theta = np.diag(H) / TWO_PI_I
    total = complex(theta.sum())
    theta_inf = complex(mu_high / (math.pi * 1j) - total)
    mismatch = abs(math.pi * 1j * (total - theta_inf) - mu_low)
    if mismatch > threshold:
        logger.warning(f"PVI eigenvalue consistency off by {mismatch:.3e}")
    u = point.u
    return PVIParameters(
        x=float((u[1] - u[0]) / (u[2] - u[0])),
        theta=(complex(theta[0]), complex(theta[1]), complex(theta[2])),
        theta_inf=theta_inf,
        alpha=(theta_inf - 1) ** 2 / 2,
        beta=-complex(theta[0]) ** 2 / 2,
        gamma=-complex(theta[2]) ** 2 / 2,
        delta=-complex(theta[1]) ** 2 / 2,
    )
