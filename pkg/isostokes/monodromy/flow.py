# isostokes/monodromy/flow.py
"""
The rank-n isomonodromy equation and the caterpillar zone asymptotics.

A solution is a Hermitian matrix function phi(u) of increasing real
coordinates u. In direction du the flow reads

    dphi = (1/2 pi i) [phi, ad_u^{-1} ad_{diag(du)} phi],

which is a Lax equation: the spectrum and the diagonal of phi are conserved.
"""
from __future__ import annotations
from typing import Dict, List, Optional, Sequence
import logging
import time

import numpy as np
from scipy import optimize

from ..core.errors import (
    DegenerateU,
    FixedPointDivergence,
    InputError,
    NonPositiveRatio,
    NonzeroDiagonal,
    StepSizeUnderflow,
)
from ..core.integrator import DormandPrince54
from ..core.linalg import (
    TWO_PI_I,
    check_hermitian,
    delta_k,
    eta_k,
    herm_eigen,
    hermitian_part,
    hermitian_to_params,
    log_power,
    p_flip,
    params_to_hermitian,
    scaled_power,
)
from ..core.models import (
    IntegrationDiagnostics,
    PathInU,
    RegularPoint,
    Side,
    Trajectory,
    TrajectorySample,
    ZoneSeed,
)
from ..core.special import branched_log
from ..infrastructure.logging_config import get_performance_logger

logger = logging.getLogger(__name__)

KAPPA = 1.0 / TWO_PI_I

DEFAULT_GAP_FLOOR = 1e-10
DEFAULT_FLOW_TOL = 1e-10
DEFAULT_RHO_MIN = 10.0
DEFAULT_FP_TOL = 1e-12
DEFAULT_FP_MAX_ITER = 200

# ---------------------------------------------------------------------------
# Points and paths
# ---------------------------------------------------------------------------

def regular_point(u: Sequence[float], gap_floor: float = DEFAULT_GAP_FLOOR) -> RegularPoint:
    """
    Validate strictly increasing coordinates.

    Raises:
        DegenerateU: If some consecutive gap is below ``gap_floor``
    """
    arr = np.asarray(u, dtype=float).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise InputError("u must be a non-empty vector of finite reals")
    gaps = np.diff(arr)
    if gaps.size and gaps.min() < gap_floor:
        k = int(np.argmin(gaps))
        raise DegenerateU(
            f"u is not strictly increasing with gap >= {gap_floor:.1e} (gap {gaps[k]:.3e} at index {k})",
            index=k,
            gap=float(gaps[k]),
            gap_floor=gap_floor,
        )
    return RegularPoint(arr.copy())

def make_path(waypoints: Sequence[Sequence[float]], gap_floor: float = DEFAULT_GAP_FLOOR) -> PathInU:
    """
    Piecewise-linear path through validated waypoints.

    Gaps are affine along a segment, so regular endpoints keep every interior
    point at least as separated as the smaller endpoint gap.
    """
    points = tuple(regular_point(w, gap_floor) for w in waypoints)
    if len(points) < 1:
        raise InputError("a path needs at least one waypoint")
    n = points[0].n
    if any(p.n != n for p in points):
        raise InputError("all waypoints must have the same dimension")
    return PathInU(points)

def plus_point(rho: float, n: int) -> RegularPoint:
    """(rho, rho^2, ..., rho^n)."""
    return RegularPoint(rho ** np.arange(1, n + 1, dtype=float))

def minus_point(rho: float, n: int) -> RegularPoint:
    """(-rho^n, ..., -rho^2, -rho)."""
    return plus_point(rho, n).flipped()

def reference_path(point: RegularPoint) -> PathInU:
    """Straight segment from u to the equally spaced point with the same endpoints."""
    target = np.linspace(point.u[0], point.u[-1], point.n)
    return PathInU((point, RegularPoint(target)))

# ---------------------------------------------------------------------------
# Vector field
# ---------------------------------------------------------------------------

def _differences(u: np.ndarray, gap_floor: float) -> np.ndarray:
    D = u[:, None] - u[None, :]
    n = u.shape[0]
    off = ~np.eye(n, dtype=bool)
    if n > 1:
        closest = float(np.abs(D[off]).min())
        if closest < gap_floor:
            raise DegenerateU(f"coordinates of u collide (gap {closest:.3e})", gap=closest, gap_floor=gap_floor)
    D[~off] = 1.0
    return D

def ad_u_inverse(u, N, gap_floor: float = DEFAULT_GAP_FLOOR) -> np.ndarray:
    """
    The off-diagonal M with [diag(u), M] = N, i.e. M_ij = N_ij / (u_i - u_j).

    Raises:
        NonzeroDiagonal: If N has a nonzero diagonal
        DegenerateU: If two coordinates of u are closer than ``gap_floor``
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    N = np.asarray(N, dtype=complex)
    scale = max(float(np.linalg.norm(N)), np.finfo(float).tiny)
    if np.abs(np.diag(N)).max(initial=0.0) > 1e-14 * scale:
        raise NonzeroDiagonal("ad_u_inverse needs a matrix with zero diagonal")
    M = N / _differences(u, gap_floor)
    np.fill_diagonal(M, 0.0)
    return M

def directional_field(u: np.ndarray, du: np.ndarray, phi: np.ndarray, gap_floor: float = DEFAULT_GAP_FLOOR) -> np.ndarray:
    """sum_k V_k du_k, evaluated without forming the individual V_k."""
    N = (du[:, None] - du[None, :]) * phi
    M = N / _differences(u, gap_floor)
    np.fill_diagonal(M, 0.0)
    return KAPPA * (phi @ M - M @ phi)

def iso_vector_field(point: RegularPoint, phi, gap_floor: float = DEFAULT_GAP_FLOOR) -> List[np.ndarray]:
    """
    The n Hermitian matrices V_k = (1/2 pi i)[phi, ad_u^{-1} ad_{E_kk} phi].

    They sum to zero and have zero diagonal.
    """
    phi = np.asarray(phi, dtype=complex)
    n = point.n
    fields = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        fields.append(directional_field(point.u, e, phi, gap_floor))
    return fields

# ---------------------------------------------------------------------------
# Path integration
# ---------------------------------------------------------------------------

def integrate_path(phi0,
                   path: PathInU,
                   tol: float = DEFAULT_FLOW_TOL,
                   gap_floor: float = DEFAULT_GAP_FLOOR,
                   max_steps: int = 200000,
                   h_min_fraction: float = 1e-14,
                   hermit_tol: float = 1e-12,
                   record_steps: bool = False) -> Trajectory:
    """
    Integrate the flow along a piecewise-linear path.

    Every segment covers the t-interval [k/m, (k+1)/m]. The state is
    re-symmetrized after every accepted step.

    Args:
        phi0: Hermitian initial value at the path start
        path: Path in the regular chamber
        tol: Absolute and relative local error tolerance
        record_steps: Keep every accepted step as a sample, not just waypoints

    Returns:
        Trajectory with samples at (at least) every waypoint

    Raises:
        StepSizeUnderflow: Near a pole of the solution; ``t`` is the path parameter
        ToleranceNotMet: Step budget exhausted or projection drift too large
    """
    phi = check_hermitian(phi0, hermit_tol, "phi0")
    m = path.n_segments
    samples = [TrajectorySample(0.0, path.start, phi.copy())]
    diagnostics = IntegrationDiagnostics()
    started = time.perf_counter()
    h_prev: Optional[float] = None

    for k in range(m):
        a = path.waypoints[k]
        b = path.waypoints[k + 1]
        du = b.u - a.u
        if not np.any(du):
            samples.append(TrajectorySample((k + 1) / m, b, phi.copy()))
            continue
        u0 = a.u

        def rhs(s: float, y: np.ndarray, u0=u0, du=du) -> np.ndarray:
            return directional_field(u0 + s * du, du, y, gap_floor)

        stepper = DormandPrince54(
            rhs,
            tol=tol,
            max_steps=max_steps,
            h_min_fraction=h_min_fraction,
            projection=hermitian_part,
        )
        try:
            result = stepper.integrate(phi, 0.0, 1.0, h0=h_prev, record_steps=record_steps)
        except StepSizeUnderflow as e:
            # location on the whole path, not the segment
            local = e.t
            e.t = (k + local) / m
            e.details["t"] = e.t
            e.details["u"] = (u0 + local * du).tolist()
            logger.warning(f"Flow step underflow at t={e.t:.6g}, u={e.details['u']}")
            raise
        diagnostics.merge(result.diagnostics)
        h_prev = result.last_step if result.last_step > 0 else None
        phi = result.y
        if record_steps:
            for s, y in result.steps[1:-1]:
                samples.append(TrajectorySample((k + s) / m, RegularPoint(u0 + s * du), y))
        samples.append(TrajectorySample((k + 1) / m, b, phi.copy()))

    elapsed = time.perf_counter() - started
    get_performance_logger().log_integration(
        "isomonodromy-flow", elapsed, diagnostics.accepted_steps,
        diagnostics.rejected_steps, diagnostics.max_error_estimate,
    )
    return Trajectory(samples=samples, diagnostics=diagnostics)

def flow_invariants(phi) -> Dict[str, np.ndarray]:
    """Conserved quantities of the flow: ascending spectrum and diagonal."""
    phi = np.asarray(phi, dtype=complex)
    return {
        "spectrum": herm_eigen(phi).values,
        "diagonal": np.real(np.diag(phi)).copy(),
    }

# ---------------------------------------------------------------------------
# Zone conjugators, seeding and extraction
# ---------------------------------------------------------------------------

def conjugator_plus(A, point: RegularPoint) -> np.ndarray:
    """
    C = prod_{k=0}^{n-1} (u_k / u_{k+1})^{delta_k(A) / 2 pi i} with u_0 = 1,
    the k = n - 1 factor leftmost so that it acts next to A in C^{-1} A C;
    diag(C^{-1} A C) = diag(A) then holds exactly. Unitary for Hermitian A.

    Raises:
        NonPositiveRatio: If some u_k / u_{k+1} is not positive
    """
    A = np.asarray(A, dtype=complex)
    n = point.n
    coords = np.concatenate([[1.0], point.u])
    ratios = coords[:-1] / coords[1:]
    if np.any(ratios <= 0):
        k = int(np.flatnonzero(ratios <= 0)[0])
        raise NonPositiveRatio(
            f"plus-zone conjugator needs positive ratios; u_{k}/u_{k + 1} = {ratios[k]:.3e}",
            index=k,
        )
    C = np.eye(n, dtype=complex)
    for k in range(n - 1, -1, -1):
        C = C @ scaled_power(delta_k(A, k), float(ratios[k]), KAPPA)
    return C

def conjugator_minus(A, point: RegularPoint) -> np.ndarray:
    """
    C = prod_{k=n}^{1} (u_{k+1} / u_k)^{eta_{n-k}(A) / 2 pi i} with u_{n+1} = -1,
    the k = 1 factor leftmost (the P-mirror of ``conjugator_plus``); bases
    are logged with ``branched_log``.
    """
    A = np.asarray(A, dtype=complex)
    n = point.n
    coords = np.concatenate([point.u, [-1.0]])
    C = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        base = coords[k] / coords[k - 1]
        C = C @ log_power(eta_k(A, n - k), branched_log(base), KAPPA)
    return C

def _check_rho(rho: float, rho_min: float) -> None:
    if not rho > rho_min:
        raise InputError(f"rho must exceed {rho_min}, got {rho}", rho=rho, rho_min=rho_min)

def seed_plus(A_inf, rho: float, rho_min: float = DEFAULT_RHO_MIN, hermit_tol: float = 1e-12) -> ZoneSeed:
    """Solution value C^{-1} A_inf C at (rho, ..., rho^n)."""
    _check_rho(rho, rho_min)
    A = check_hermitian(A_inf, hermit_tol, "A_inf")
    point = plus_point(rho, A.shape[0])
    C = conjugator_plus(A, point)
    phi = hermitian_part(C.conj().T @ A @ C)
    return ZoneSeed(zone=Side.PLUS, rho=rho, point=point, phi=phi)

def seed_minus(A_minus, rho: float, rho_min: float = DEFAULT_RHO_MIN, hermit_tol: float = 1e-12) -> ZoneSeed:
    """Minus-zone seed through the P-flip: P seed_plus(P A P).phi P at -P u P."""
    A = check_hermitian(A_minus, hermit_tol, "A_minus_inf")
    flipped = seed_plus(p_flip(A), rho, rho_min, hermit_tol)
    return ZoneSeed(zone=Side.MINUS, rho=rho, point=flipped.point.flipped(), phi=p_flip(flipped.phi))

def seed_minus_direct(A_minus, rho: float, rho_min: float = DEFAULT_RHO_MIN, hermit_tol: float = 1e-12) -> ZoneSeed:
    """Minus-zone seed from the explicit product ``conjugator_minus``."""
    _check_rho(rho, rho_min)
    A = check_hermitian(A_minus, hermit_tol, "A_minus_inf")
    point = minus_point(rho, A.shape[0])
    C = conjugator_minus(A, point)
    phi = hermitian_part(C.conj().T @ A @ C)
    return ZoneSeed(zone=Side.MINUS, rho=rho, point=point, phi=phi)

def _zone_residual(x: np.ndarray, phi: np.ndarray, point: RegularPoint) -> np.ndarray:
    n = phi.shape[0]
    A = params_to_hermitian(x, n)
    C = conjugator_plus(A, point)
    return hermitian_to_params(hermitian_part(C.conj().T @ A @ C) - phi)

def _solve_zone_equation(phi: np.ndarray, point: RegularPoint, start: np.ndarray, fp_tol: float) -> Optional[np.ndarray]:
    """Solve C(A)^H A C(A) = phi by Powell's hybrid method from ``start``."""
    n = phi.shape[0]
    sol = optimize.root(_zone_residual, hermitian_to_params(start), args=(phi, point),
                        method="hybr", options={"xtol": min(fp_tol, 1e-12)})
    A = params_to_hermitian(sol.x, n)
    residual = float(np.linalg.norm(_zone_residual(sol.x, phi, point)))
    if residual <= max(fp_tol, 1e-13 * max(1.0, float(np.linalg.norm(phi)))):
        return A
    logger.debug(f"hybrid zone solve stopped at residual {residual:.3e}: {sol.message}")
    return None

def extract_plus(phi, point: RegularPoint, fp_tol: float = DEFAULT_FP_TOL,
                 max_iter: int = DEFAULT_FP_MAX_ITER, hermit_tol: float = 1e-12) -> np.ndarray:
    """
    Invert the plus-zone asymptotics: iterate A <- C(A) phi C(A)^{-1}.

    When the iteration stops contracting (three growing updates in a row)
    the zone equation C(A)^H A C(A) = phi is handed to a hybrid Newton
    solver started from the best iterate.

    Raises:
        FixedPointDivergence: If neither the iteration nor the solver settles
    """
    phi = check_hermitian(phi, hermit_tol, "phi")
    A = phi
    best, best_change = phi, float("inf")
    change = float("inf")
    growing = 0
    for iteration in range(1, max_iter + 1):
        C = conjugator_plus(A, point)
        A_next = hermitian_part(C @ phi @ C.conj().T)
        previous = change
        change = float(np.linalg.norm(A_next - A))
        A = A_next
        if change <= fp_tol:
            logger.debug(f"extract_plus converged in {iteration} iterations (change {change:.2e})")
            return A
        if change < best_change:
            best, best_change = A, change
        growing = growing + 1 if change >= previous else 0
        if growing >= 3:
            break

    logger.warning(f"zone fixed point not contracting (last change {change:.3e}); switching to hybrid solve")
    solved = _solve_zone_equation(phi, point, best, fp_tol)
    if solved is not None:
        return solved
    raise FixedPointDivergence(
        f"zone extraction did not converge (best change {best_change:.3e})",
        iterations=max_iter,
        last_change=change,
        best_change=best_change,
    )

def extract_minus(phi, point: RegularPoint, fp_tol: float = DEFAULT_FP_TOL,
                  max_iter: int = DEFAULT_FP_MAX_ITER, hermit_tol: float = 1e-12) -> np.ndarray:
    """P extract_plus(P phi P, -P u P) P."""
    phi = np.asarray(phi, dtype=complex)
    return p_flip(extract_plus(p_flip(phi), point.flipped(), fp_tol, max_iter, hermit_tol))

def extract(phi, point: RegularPoint, zone: Side, **kwargs) -> np.ndarray:
    if zone is Side.PLUS:
        return extract_plus(phi, point, **kwargs)
    return extract_minus(phi, point, **kwargs)

def seed(A, rho: float, zone: Side, **kwargs) -> ZoneSeed:
    if zone is Side.PLUS:
        return seed_plus(A, rho, **kwargs)
    return seed_minus(A, rho, **kwargs)
