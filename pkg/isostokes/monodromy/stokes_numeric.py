# isostokes/monodromy/stokes_numeric.py
"""
Canonical solutions and Stokes matrices of

    dF/dz = (i U - A / (2 pi i z)) F,      U = diag(u),

by formal-series bootstrap at a large radius followed by ODE continuation.

All work happens in the sorted frame (u ascending) after shifting u_1 to 0
and scaling to unit minimal gap; the Stokes pair is mapped back exactly.
The integrated quantity is G = e^{-iUz} F, which satisfies

    dG/dz = -(1/2 pi i z) (A_jk e^{i (u_k - u_j) z}) G

and has bounded coefficients on the real axis.
"""
from __future__ import annotations
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple
import cmath
import logging
import math
import time

import numpy as np

from ..core.errors import (
    AnchorTooClose,
    ConditioningFailure,
    DegenerateU,
    PathCrossesCut,
    TriangularityViolation,
    WrongDimension,
    ZeroArgument,
)
from ..core.integrator import DormandPrince54
from ..core.linalg import TWO_PI_I, check_hermitian, herm_eigen
from ..core.models import FormalSeries, IntegrationDiagnostics, LinearSystem, Side, StokesOptions, StokesPair
from ..infrastructure.logging_config import get_performance_logger

logger = logging.getLogger(__name__)

KAPPA = 1.0 / TWO_PI_I

def linear_system(u: Sequence[float], A, gap_floor: float = 1e-10, hermit_tol: float = 1e-12) -> LinearSystem:
    """
    Build a LinearSystem; u may be unsorted but must have distinct entries.

    Raises:
        DegenerateU: If two entries of u are closer than ``gap_floor``
    """
    u_arr = np.asarray(u, dtype=float).reshape(-1)
    H = check_hermitian(A, hermit_tol, "A")
    if H.shape[0] != u_arr.shape[0]:
        raise WrongDimension(f"A is {H.shape[0]}x{H.shape[0]} but u has {u_arr.shape[0]} entries")
    sigma = tuple(int(i) for i in np.argsort(u_arr, kind="stable"))
    gaps = np.diff(u_arr[list(sigma)])
    if gaps.size and gaps.min() < gap_floor:
        raise DegenerateU(f"entries of u are not distinct (gap {gaps.min():.3e})", gap=float(gaps.min()))
    return LinearSystem(u=u_arr.copy(), A=H, sigma=sigma)

def sorted_system(sys: LinearSystem) -> LinearSystem:
    """The same system with u permuted ascending (A' = P^-1 A P)."""
    idx = list(sys.sigma)
    return LinearSystem(u=sys.u[idx].copy(), A=sys.A[np.ix_(idx, idx)].copy(), sigma=tuple(range(sys.n)))

def to_original_frame(S: np.ndarray, sigma: Sequence[int]) -> np.ndarray:
    """P_sigma S P_sigma^-1, with (P_sigma)_{sigma(i), i} = 1."""
    idx = list(sigma)
    out = np.empty_like(S)
    out[np.ix_(idx, idx)] = S
    return out

# ---------------------------------------------------------------------------
# Formal series
# ---------------------------------------------------------------------------

def formal_series(sys: LinearSystem, m: int) -> FormalSeries:
    """
    Coefficients H_1..H_m of the formal solution, and the norm of H_{m+1}.

    Off-diagonal entries come from commuting with U:
        i (u_a - u_b) (H_{j+1})_ab = -j (H_j)_ab + kappa (A H_j - H_j [A])_ab,
    diagonal entries from the next-order condition:
        (H_j)_aa = (kappa / j) sum_{c != a} A_ac (H_j)_ca.
    """
    if m < 1:
        raise ValueError("series order must be at least 1")
    u = np.asarray(sys.u, dtype=float)
    A = np.asarray(sys.A, dtype=complex)
    n = u.shape[0]
    D = u[:, None] - u[None, :]
    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.abs(D[off]).min() == 0:
        raise DegenerateU("formal series needs distinct u")
    D[~off] = 1.0
    lam = np.diag(A).copy()
    A_off = A - np.diag(lam)

    coefficients: List[np.ndarray] = []
    H = np.eye(n, dtype=complex)
    for j in range(0, m + 1):
        rhs = -j * H + KAPPA * (A @ H - H * lam[None, :])
        H_next = rhs / (1j * D)
        np.fill_diagonal(H_next, 0.0)
        # diagonal from the order-(j+1) condition
        diag = (KAPPA / (j + 1)) * np.einsum("ac,ca->a", A_off, H_next)
        H_next[np.diag_indices(n)] = diag
        H = H_next
        coefficients.append(H)
    return FormalSeries(
        coefficients=tuple(coefficients[:m]),
        remainder_norm=float(np.linalg.norm(coefficients[m])),
        n=n,
    )

def series_defect(sys: LinearSystem, series: FormalSeries, z: complex, terms: Optional[int] = None) -> float:
    """
    Norm of the residual left by the truncated series in
    H' = i [U, H] - (kappa / z) (A H - H [A]).
    """
    terms = series.order if terms is None else terms
    n = series.n
    U = np.diag(np.asarray(sys.u, dtype=complex))
    A = np.asarray(sys.A, dtype=complex)
    lam = np.diag(A)
    H = np.eye(n, dtype=complex)
    dH = np.zeros((n, n), dtype=complex)
    for j, h in enumerate(series.coefficients[:terms], start=1):
        H = H + h * z ** (-j)
        dH = dH - j * h * z ** (-j - 1)
    residual = dH - 1j * (U @ H - H @ U) + (KAPPA / z) * (A @ H - H * lam[None, :])
    return float(np.linalg.norm(residual))

# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Piece:
    """One contour piece z(s), s in [0, 1]: a segment or an arc about 0."""
    kind: str
    a: complex = 0j
    b: complex = 0j
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0

    def z(self, s: float) -> complex:
        if self.kind == "segment":
            return self.a + s * (self.b - self.a)
        return self.radius * cmath.exp(1j * (self.theta0 + s * (self.theta1 - self.theta0)))

    def log_factor(self, s: float) -> complex:
        """dz/ds divided by z."""
        if self.kind == "segment":
            return (self.b - self.a) / self.z(s)
        return 1j * (self.theta1 - self.theta0)

def _segment(a: complex, b: complex) -> _Piece:
    return _Piece(kind="segment", a=complex(a), b=complex(b))

def _arc(radius: float, theta0: float, theta1: float) -> _Piece:
    return _Piece(kind="arc", radius=radius, theta0=theta0, theta1=theta1)

class _GPropagator:
    """Integrates G along contour pieces for a fixed normalized system."""

    def __init__(self, u: np.ndarray, A: np.ndarray, tol: float):
        self.A = np.asarray(A, dtype=complex)
        self.D = (u[None, :] - u[:, None]).astype(complex)   # u_k - u_j
        self.tol = tol
        self.diagnostics = IntegrationDiagnostics()

    def coefficient(self, z: complex) -> np.ndarray:
        return self.A * np.exp(1j * self.D * z)

    def run(self, G0: np.ndarray, pieces: Sequence[_Piece]) -> np.ndarray:
        G = np.array(G0, dtype=complex)
        for piece in pieces:
            def rhs(s: float, y: np.ndarray, piece=piece) -> np.ndarray:
                z = piece.z(s)
                return -KAPPA * piece.log_factor(s) * (self.coefficient(z) @ y)

            result = DormandPrince54(rhs, tol=self.tol, max_steps=500000).integrate(G, 0.0, 1.0)
            self.diagnostics.merge(result.diagnostics)
            G = result.y
        return G

# ---------------------------------------------------------------------------
# Normalization and anchors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Normalized:
    sys: LinearSystem        # sorted, u_1 = 0, unit min gap
    scale: float             # t = 1 / min_gap
    shift: float             # original u_1 (sorted)
    lam: np.ndarray          # diag(A), sorted frame
    sigma: Tuple[int, ...]

def _normalize(sys: LinearSystem) -> _Normalized:
    srt = sorted_system(sys)
    u = srt.u
    shift = float(u[0])
    v = u - shift
    t = 1.0 / float(np.diff(v).min()) if sys.n > 1 else 1.0
    return _Normalized(
        sys=LinearSystem(u=v * t, A=srt.A, sigma=tuple(range(sys.n))),
        scale=t,
        shift=shift,
        lam=np.real(np.diag(srt.A)).copy(),
        sigma=sys.sigma,
    )

def _anchor_G(series: FormalSeries, u: np.ndarray, lam: np.ndarray, z: complex, log_z: complex) -> np.ndarray:
    """G = e^{-iUz} H(z) e^{iUz} z^{-[A]/2 pi i} with the given log z."""
    phase = np.exp(1j * u * z)
    H = series.evaluate(z)
    return (H * phase[None, :]) / phase[:, None] * np.exp(-KAPPA * lam * log_z)[None, :]

def _choose_radius(series: FormalSeries, opts: StokesOptions, scale: float, tol: float) -> float:
    # Radius in the normalized frame, where min gap = 1
    if opts.anchor_radius is not None:
        R = opts.anchor_radius / scale
        if R < opts.anchor_product:
            raise AnchorTooClose(
                f"anchor radius gives R * min_gap = {R:.3g} below the floor {opts.anchor_product}",
                product=R,
                floor=opts.anchor_product,
            )
        return R
    R = opts.anchor_product
    for _ in range(opts.anchor_max_doublings):
        if series.tail_estimate(R) <= tol:
            break
        R *= opts.anchor_growth
    return R

# ---------------------------------------------------------------------------
# Canonical solutions
# ---------------------------------------------------------------------------

def _sector_arg(z: complex, which: Side, arg: Optional[float]) -> float:
    if arg is None:
        arg = cmath.phase(z)
        if which is Side.MINUS and arg > 0:
            arg -= 2 * math.pi
    lo, hi = (-math.pi, math.pi) if which is Side.PLUS else (-2 * math.pi, 0.0)
    if not lo <= arg <= hi:
        raise PathCrossesCut(
            f"arg {arg:.6g} is outside the {which.value} sector [{lo:.6g}, {hi:.6g}]",
            arg=arg,
        )
    return arg

def canonical_eval(sys: LinearSystem,
                   z: complex,
                   which: Side,
                   opts: Optional[StokesOptions] = None,
                   arg: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    Value F_plus(z) or F_minus(z) of a canonical solution.

    F_plus is anchored on the positive axis (arg 0), F_minus on the negative
    axis (arg -pi, Im log z = -pi). From the anchor the path follows the real
    axis to |z| and then the circle |w| = |z| to arg(z).

    Args:
        sys: Linear system (any order of u)
        z: Evaluation point
        which: PLUS (arg in [-pi, pi]) or MINUS (arg in [-2 pi, 0])
        opts: Bootstrap radius, series order and ODE tolerance
        arg: Explicit argument of z on the solution's sheet

    Returns:
        (F(z) in the frame of ``sys``, error estimate)

    Raises:
        ZeroArgument: At z = 0
        PathCrossesCut: If arg lies outside the solution's sector
        AnchorTooClose: If an explicit anchor radius is below the floor
    """
    opts = opts or StokesOptions()
    z = complex(z)
    if z == 0:
        raise ZeroArgument("canonical solutions are not evaluated at z = 0")
    theta = _sector_arg(z, which, arg)
    norm = _normalize(sys)
    t = norm.scale
    w_abs = abs(z) / t
    series = formal_series(norm.sys, opts.series_order)
    R = max(_choose_radius(series, opts, t, opts.tol), w_abs)
    u = norm.sys.u
    lam = norm.lam

    if which is Side.PLUS:
        start, start_arg = R + 0j, 0.0
    else:
        start, start_arg = -R + 0j, -math.pi
    G0 = _anchor_G(series, u, lam, start, math.log(R) + 1j * start_arg)
    target_on_axis = w_abs * cmath.exp(1j * start_arg)
    pieces = []
    if abs(start - target_on_axis) > 0:
        pieces.append(_segment(start, target_on_axis))
    if theta != start_arg:
        pieces.append(_arc(w_abs, start_arg, theta))
    prop = _GPropagator(u, norm.sys.A, opts.tol)
    G = prop.run(G0, pieces)

    # back to the original variables: F(z) = F''(z / t) t^{-[A]/2 pi i}, F = e^{iUz} G
    w = w_abs * cmath.exp(1j * theta)
    F_norm = np.exp(1j * u * w)[:, None] * G
    F_sorted = F_norm * np.exp(-KAPPA * lam * math.log(t))[None, :] * np.exp(1j * norm.shift * z)
    F = to_original_frame(F_sorted, norm.sigma)
    error = series.tail_estimate(R) + prop.diagnostics.max_error_estimate
    return F, error

# ---------------------------------------------------------------------------
# Stokes matrices
# ---------------------------------------------------------------------------

def _triangularity_defect(S_plus: np.ndarray, S_minus: Optional[np.ndarray]) -> float:
    defect = float(np.abs(np.tril(S_plus, -1)).max(initial=0.0)) / max(float(np.linalg.norm(S_plus)), 1e-300)
    if S_minus is not None:
        defect = max(defect, float(np.abs(np.triu(S_minus, 1)).max(initial=0.0)) / max(float(np.linalg.norm(S_minus)), 1e-300))
    return defect

def _stokes_attempt(sys: LinearSystem, opts: StokesOptions) -> StokesPair:
    norm = _normalize(sys)
    u = norm.sys.u
    A = norm.sys.A
    lam = norm.lam
    n = sys.n
    series = formal_series(norm.sys, opts.series_order)
    R = _choose_radius(series, opts, norm.scale, opts.tol)
    # keeps |e^{i(u_k - u_j) z}| below e on the detour
    width = float(u[-1] - u[0]) if n > 1 else 1.0
    r = min(opts.detour_cap, opts.detour_fraction * R, 1.0 / width)
    logR = math.log(R)
    prop = _GPropagator(u, A, opts.tol)

    G_plus_R = _anchor_G(series, u, lam, R + 0j, logR + 0j)
    G_minus_negR = _anchor_G(series, u, lam, -R + 0j, logR - 1j * math.pi)

    # F_plus from +R to -R below the origin
    lower = [_segment(R, r), _arc(r, 0.0, -math.pi), _segment(-r, -R)]
    G_plus_negR = prop.run(G_plus_R, lower)
    S_plus = np.exp(lam / 2)[:, None] * np.linalg.solve(G_minus_negR, G_plus_negR)

    dagger_defect = None
    if opts.use_dagger:
        S_minus = S_plus.conj().T
    else:
        # F_minus from arg -pi to arg -2 pi above the origin
        upper = [_segment(-R, -r), _arc(r, -math.pi, -2 * math.pi), _segment(r, R)]
        G_minus_R = prop.run(G_minus_negR, upper)
        S_minus = np.linalg.solve(G_plus_R, G_minus_R) * np.exp(-lam / 2)[None, :]
        dagger_defect = float(np.linalg.norm(S_minus - S_plus.conj().T))

    cond = float(np.linalg.cond(G_minus_negR))
    if not np.isfinite(cond) or cond > 1e12:
        raise ConditioningFailure(f"anchor solution is ill-conditioned (cond {cond:.3e})", condition=cond)

    defect = _triangularity_defect(S_plus, None if opts.use_dagger else S_minus)

    # exact map back from the normalized frame: S(u) = T^-1 S(t u) T, T = (1/t)^{[A]/2 pi i}
    T = np.exp(-KAPPA * lam * math.log(norm.scale))
    S_plus = (S_plus / T[:, None]) * T[None, :]
    S_minus = (S_minus / T[:, None]) * T[None, :]

    return StokesPair(
        S_plus=S_plus,
        S_minus=S_minus,
        sigma=norm.sigma,
        triangularity_defect=defect,
        dagger_defect=dagger_defect,
        diagnostics={
            "anchor_radius": R * norm.scale,
            "normalized_radius": R,
            "detour_radius": r,
            "series_order": series.truncation_order(R),
            "series_tail": series.tail_estimate(R),
            "ode_tol": opts.tol,
            "anchor_condition": cond,
            **prop.diagnostics.to_dict(),
        },
    )

def _check_pair(pair: StokesPair, opts: StokesOptions) -> None:
    if pair.triangularity_defect > opts.tri_tol:
        raise TriangularityViolation(
            f"Stokes matrices not triangular: defect {pair.triangularity_defect:.3e} > {opts.tri_tol:.1e}",
            defect=pair.triangularity_defect,
            tolerance=opts.tri_tol,
        )
    if pair.dagger_defect is not None and pair.dagger_defect > opts.dagger_tol:
        raise ConditioningFailure(
            f"S_minus differs from S_plus^dagger by {pair.dagger_defect:.3e} > {opts.dagger_tol:.1e}",
            defect=pair.dagger_defect,
            tolerance=opts.dagger_tol,
        )

def _project_triangular(pair: StokesPair) -> StokesPair:
    pair.S_plus = np.triu(pair.S_plus)
    pair.S_minus = np.tril(pair.S_minus)
    return pair

def stokes_numeric(sys: LinearSystem, opts: Optional[StokesOptions] = None) -> StokesPair:
    """
    Stokes pair of the system, stored in the sorted frame (S_plus upper,
    S_minus lower triangular).

    S_plus comes from F_plus = F_minus e^{-[A]/2} S_plus at z = -R, with F_plus
    continued below the origin. S_minus is S_plus^dagger unless
    ``opts.use_dagger`` is off, in which case F_minus is continued above the
    origin to arg -2 pi and the dagger defect is reported.

    A failed triangularity or dagger check is retried once with half the ODE
    tolerance and a longer series.

    Raises:
        TriangularityViolation: Defect above ``opts.tri_tol`` after the retry
        ConditioningFailure: Ill-conditioned anchor or dagger defect too large
    """
    opts = opts or StokesOptions()
    started = time.perf_counter()
    try:
        pair = _stokes_attempt(sys, opts)
        _check_pair(pair, opts)
    except (TriangularityViolation, ConditioningFailure) as e:
        retry = replace(opts, tol=opts.tol / 2, series_order=opts.series_order + opts.escalation_order_step)
        logger.warning(f"Stokes check failed ({e.message}); retrying with tol={retry.tol:.1e}, m={retry.series_order}")
        pair = _stokes_attempt(sys, retry)
        _check_pair(pair, retry)
        pair.diagnostics["escalated"] = True

    pair.diagnostics["formal_monodromy_defect"] = formal_monodromy_defect(pair, sys.A)
    elapsed = time.perf_counter() - started
    get_performance_logger().log_stokes(
        sys.n, elapsed, pair.diagnostics["anchor_radius"], pair.diagnostics["series_order"], pair.triangularity_defect,
    )
    return _project_triangular(pair)

def stokes_pair_in_original_frame(pair: StokesPair) -> Tuple[np.ndarray, np.ndarray]:
    """(P_sigma S_plus P_sigma^-1, P_sigma S_minus P_sigma^-1)."""
    return to_original_frame(pair.S_plus, pair.sigma), to_original_frame(pair.S_minus, pair.sigma)

# ---------------------------------------------------------------------------
# Consistency checks
# ---------------------------------------------------------------------------

def formal_monodromy_defect(pair: StokesPair, A) -> float:
    """max |diag(S_plus) - e^{diag(A)/2}| relative, in the sorted frame."""
    idx = list(pair.sigma)
    lam = np.real(np.diag(np.asarray(A, dtype=complex)))[idx]
    expected = np.exp(lam / 2)
    return float(np.abs(np.diag(pair.S_plus) - expected).max() / expected.max())

def monodromy_defect(pair: StokesPair, A) -> float:
    """
    S_minus S_plus is conjugate to e^A (the local monodromy at 0); relative
    distance between its ascending spectrum and e^{spec(A)}.
    """
    M = pair.S_minus @ pair.S_plus
    ev = np.sort(np.real(np.linalg.eigvals(M)))
    expected = np.exp(herm_eigen(A).values)
    return float(np.abs(ev - expected).max() / expected.max())
