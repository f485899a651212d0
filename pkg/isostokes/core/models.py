# isostokes/core/models.py
from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Any, Optional, Dict, Tuple
from enum import Enum

import numpy as np

class Side(str, Enum):
    """Caterpillar zone, or canonical solution sector, selector."""
    PLUS = "plus"
    MINUS = "minus"

    @property
    def flipped(self) -> "Side":
        return Side.MINUS if self is Side.PLUS else Side.PLUS

class PrefactorConvention(str, Enum):
    """Exponent of the exponential prefactor in the closed-form sub-diagonals."""
    SUM = "sum"                # (lambda^{(k-1)}_k + lambda^{(k)}_{k+1}) / 4
    PRINTED = "printed"        # (lambda^{(k-1)}_k - lambda^{(k)}_{k+1}) / 4

class ReportStatus(str, Enum):
    SUCCESS = "success"
    TOLERANCE_FAILED = "tolerance_failed"
    INPUT_REJECTED = "input_rejected"
    NOT_CONVERGED = "not_converged"
    SCHEMA_ERROR = "schema_error"

@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and phase-fixed unitary eigenvectors (columns)."""
    values: np.ndarray                      # real, ascending
    vectors: np.ndarray                     # n x n unitary

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

@dataclass(frozen=True)
class RegularPoint:
    """
    Point of the regular chamber: strictly increasing real coordinates.

    Construction does not validate; use ``flow.regular_point`` to build one
    with the gap floor enforced.
    """
    u: np.ndarray                           # shape (n,), float64

    @property
    def n(self) -> int:
        return int(self.u.shape[0])

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.u)

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min()) if self.n > 1 else float("inf")

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max()) if self.n > 1 else float("inf")

    @property
    def spread(self) -> float:
        """Ratio of the largest to the smallest gap (1 for n < 3)."""
        if self.n < 3:
            return 1.0
        return self.max_gap / self.min_gap

    def flipped(self) -> "RegularPoint":
        """The point -P u P (reverse order and negate)."""
        return RegularPoint(-self.u[::-1].copy())

    def __str__(self) -> str:
        return f"RegularPoint({np.array2string(self.u, precision=6)})"

@dataclass(frozen=True)
class PathInU:
    """Piecewise-linear path; each segment covers an equal share of t in [0, 1]."""
    waypoints: Tuple[RegularPoint, ...]

    @property
    def n_segments(self) -> int:
        return len(self.waypoints) - 1

    @property
    def start(self) -> RegularPoint:
        return self.waypoints[0]

    @property
    def end(self) -> RegularPoint:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        return float(sum(
            np.linalg.norm(b.u - a.u) for a, b in zip(self.waypoints[:-1], self.waypoints[1:])
        ))

    def point_at(self, t: float) -> np.ndarray:
        """Coordinates u(t)."""
        m = self.n_segments
        if m == 0:
            return self.start.u.copy()
        k = min(int(t * m), m - 1)
        s = t * m - k
        u0 = self.waypoints[k].u
        u1 = self.waypoints[k + 1].u
        return u0 + s * (u1 - u0)

    def reversed(self) -> "PathInU":
        return PathInU(tuple(reversed(self.waypoints)))

@dataclass
class IntegrationDiagnostics:
    """Counters and error bounds accumulated by the adaptive integrator."""
    accepted_steps: int = 0
    rejected_steps: int = 0
    function_evaluations: int = 0
    max_error_estimate: float = 0.0
    max_projection_correction: float = 0.0  # size of the post-step re-symmetrization
    min_step: float = float("inf")

    def merge(self, other: "IntegrationDiagnostics") -> None:
        self.accepted_steps += other.accepted_steps
        self.rejected_steps += other.rejected_steps
        self.function_evaluations += other.function_evaluations
        self.max_error_estimate = max(self.max_error_estimate, other.max_error_estimate)
        self.max_projection_correction = max(self.max_projection_correction, other.max_projection_correction)
        self.min_step = min(self.min_step, other.min_step)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accepted_steps": self.accepted_steps,
            "rejected_steps": self.rejected_steps,
            "function_evaluations": self.function_evaluations,
            "max_error_estimate": self.max_error_estimate,
            "max_projection_correction": self.max_projection_correction,
            "min_step": self.min_step if np.isfinite(self.min_step) else None,
        }

@dataclass(frozen=True)
class TrajectorySample:
    t: float
    point: RegularPoint
    phi: np.ndarray

@dataclass
class Trajectory:
    """Sampled solution of the isomonodromy flow along a path."""
    samples: List[TrajectorySample]
    diagnostics: IntegrationDiagnostics = field(default_factory=IntegrationDiagnostics)

    @property
    def final_phi(self) -> np.ndarray:
        return self.samples[-1].phi

    @property
    def final_point(self) -> RegularPoint:
        return self.samples[-1].point

    @property
    def hermiticity_defect(self) -> float:
        return max(float(np.abs(s.phi - s.phi.conj().T).max()) for s in self.samples)

    @property
    def diagonal_drift(self) -> float:
        d0 = np.diag(self.samples[0].phi)
        return max(float(np.abs(np.diag(s.phi) - d0).max()) for s in self.samples)

    @property
    def spectrum_drift(self) -> float:
        ev0 = np.linalg.eigvalsh(self.samples[0].phi)
        return max(float(np.abs(np.linalg.eigvalsh(s.phi) - ev0).max()) for s in self.samples)

    def summary(self) -> Dict[str, Any]:
        return {
            "samples": len(self.samples),
            "hermiticity_defect": self.hermiticity_defect,
            "diagonal_drift": self.diagonal_drift,
            "spectrum_drift": self.spectrum_drift,
            **self.diagnostics.to_dict(),
        }

@dataclass(frozen=True)
class ZoneSeed:
    """Approximate solution value deep in a caterpillar zone."""
    zone: Side
    rho: float
    point: RegularPoint
    phi: np.ndarray

@dataclass(frozen=True)
class LinearSystem:
    """
    dF/dz = (i u - A / (2 pi i z)) F.

    ``u`` need not be sorted; ``sigma`` lists the positions of u in ascending
    order (u[sigma[0]] < u[sigma[1]] < ...).
    """
    u: np.ndarray
    A: np.ndarray
    sigma: Tuple[int, ...]

    @property
    def n(self) -> int:
        return int(self.u.shape[0])

    @property
    def is_sorted(self) -> bool:
        return self.sigma == tuple(range(self.n))

@dataclass(frozen=True)
class FormalSeries:
    """
    Coefficients H_1..H_m of F ~ (I + sum_j H_j z^-j) e^{iuz} z^{-[A]/2 pi i},
    plus the norm of H_{m+1} for the truncation estimate.
    """
    coefficients: Tuple[np.ndarray, ...]
    remainder_norm: float
    n: int

    @property
    def order(self) -> int:
        return len(self.coefficients)

    @property
    def norms(self) -> List[float]:
        return [float(np.linalg.norm(h)) for h in self.coefficients]

    def truncation_order(self, radius: float) -> int:
        """Number of terms kept at |z| = radius: stop once term sizes grow."""
        previous = 1.0
        for j, norm in enumerate(self.norms, start=1):
            term = norm / radius ** j
            if term > previous:
                return j - 1
            previous = term
        return self.order

    def tail_estimate(self, radius: float) -> float:
        """Size of the first omitted term at |z| = radius."""
        j = self.truncation_order(radius)
        norm = self.remainder_norm if j == self.order else self.norms[j]
        return norm / radius ** (j + 1)

    def evaluate(self, z: complex, terms: Optional[int] = None) -> np.ndarray:
        """Truncated sum I + sum_{j <= terms} H_j z^-j (optimal truncation by default)."""
        if terms is None:
            terms = self.truncation_order(abs(z))
        acc = np.zeros((self.n, self.n), dtype=complex)
        for h in reversed(self.coefficients[:terms]):
            acc = (acc + h) / z
        return acc + np.eye(self.n, dtype=complex)

@dataclass(frozen=True)
class StokesOptions:
    """Numerical parameters of a Stokes evaluation."""
    series_order: int = 12
    anchor_product: float = 30.0           # lower bound on R * min_gap
    anchor_growth: float = 1.5
    anchor_max_doublings: int = 8
    detour_cap: float = 1.0
    detour_fraction: float = 0.01
    tol: float = 1e-11
    tri_tol: float = 1e-8
    dagger_tol: float = 1e-6
    use_dagger: bool = True
    max_direct_spread: float = 4.0
    escalation_order_step: int = 6
    anchor_radius: Optional[float] = None  # fixed R in the z-plane; chosen automatically when None
    gap_floor: float = 1e-10
    flow_tol: float = 1e-10                # used when transporting before evaluation

    @classmethod
    def from_config(cls, config: Any) -> "StokesOptions":
        s = config.stokes
        return cls(
            series_order=s.series_order,
            anchor_product=s.anchor_product,
            anchor_growth=s.anchor_growth,
            anchor_max_doublings=s.anchor_max_doublings,
            detour_cap=s.detour_cap,
            detour_fraction=s.detour_fraction,
            tol=s.tol,
            tri_tol=s.tri_tol,
            dagger_tol=s.dagger_tol,
            use_dagger=s.use_dagger,
            max_direct_spread=s.max_direct_spread,
            escalation_order_step=s.escalation_order_step,
            gap_floor=config.numerics.gap_floor,
            flow_tol=config.flow.tol,
        )

@dataclass
class StokesPair:
    """Stokes matrices in the sorted frame, with their quality diagnostics."""
    S_plus: np.ndarray                      # upper triangular
    S_minus: np.ndarray                     # lower triangular
    sigma: Tuple[int, ...]
    triangularity_defect: float = 0.0       # relative to ||S||
    dagger_defect: Optional[float] = None   # only when S_minus was computed directly
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.S_plus.shape[0])

    def flipped(self) -> "StokesPair":
        """P-flip: conjugate by the anti-diagonal permutation and swap the roles."""
        return StokesPair(
            S_plus=self.S_minus[::-1, ::-1].copy(),
            S_minus=self.S_plus[::-1, ::-1].copy(),
            sigma=tuple(self.n - 1 - s for s in reversed(self.sigma)),
            triangularity_defect=self.triangularity_defect,
            dagger_defect=self.dagger_defect,
            diagnostics=dict(self.diagnostics),
        )

@dataclass(frozen=True)
class GTPattern:
    """
    Gelfand-Tsetlin triangle of a Hermitian matrix.

    ``levels[k - 1]`` holds the ascending eigenvalues of the k x k leading
    block; ``extensions[k]`` is lambda^{(k)}_{k+1} for k = 0..n-1.
    """
    levels: Tuple[np.ndarray, ...]
    extensions: Tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> np.ndarray:
        """Eigenvalues of the k x k leading block (empty for k = 0)."""
        if k == 0:
            return np.zeros(0)
        return self.levels[k - 1]

@dataclass(frozen=True)
class SubdiagonalData:
    """s_plus[k-1] = (S_+)_{k,k+1}, s_minus[k-1] = (S_-)_{k+1,k} for k = 1..n-1."""
    s_plus: np.ndarray
    s_minus: np.ndarray

    @property
    def n(self) -> int:
        return int(self.s_plus.shape[0]) + 1

    def flipped(self) -> "SubdiagonalData":
        """P-flip: (S_+)_{k,k+1} <-> (S_-)_{n+1-k,n-k}, order reversed."""
        return SubdiagonalData(s_plus=self.s_minus[::-1].copy(), s_minus=self.s_plus[::-1].copy())

@dataclass
class ConnectionReport:
    """Outcome of checking the connection formula for a pair (A_inf, A_minus_inf)."""
    A_inf: np.ndarray
    A_minus_inf: np.ndarray
    stokes_from_plus: StokesPair
    stokes_from_minus: StokesPair
    residual: float
    rho: float
    tol: float
    closed_form_error: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def relative_residual(self) -> float:
        scale = float(np.linalg.norm(self.stokes_from_plus.S_plus))
        return self.residual / scale if scale > 0 else self.residual

    @property
    def passed(self) -> bool:
        return self.relative_residual <= self.tol

@dataclass(frozen=True)
class PVIParameters:
    """Painleve VI data of a rank-3 solution value."""
    x: float
    theta: Tuple[complex, complex, complex]
    theta_inf: complex
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x,
            "theta1": self.theta[0],
            "theta2": self.theta[1],
            "theta3": self.theta[2],
            "theta_inf": self.theta_inf,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
        }

@dataclass(frozen=True)
class SolverOptions:
    """Least-squares inversion parameters."""
    max_iter: int = 100
    diff_step: float = 1e-6
    target: float = 1e-10
    noise_factor: float = 1e3               # residual floor = noise_factor * integration tol * ||S||

    @classmethod
    def from_config(cls, config: Any) -> "SolverOptions":
        return cls(
            max_iter=config.solver.max_iter,
            diff_step=config.solver.diff_step,
            target=config.solver.target,
            noise_factor=config.solver.noise_factor,
        )

@dataclass(frozen=True)
class FlowOptions:
    """Integration and zone-extraction parameters of the isomonodromy flow."""
    tol: float = 1e-10
    rho_min: float = 10.0
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    max_steps: int = 200000
    h_min_fraction: float = 1e-14
    gap_floor: float = 1e-10
    hermit_tol: float = 1e-12

    @classmethod
    def from_config(cls, config: Any) -> "FlowOptions":
        f = config.flow
        return cls(
            tol=f.tol,
            rho_min=f.rho_min,
            fp_tol=f.fp_tol,
            fp_max_iter=f.fp_max_iter,
            max_steps=f.max_steps,
            h_min_fraction=f.h_min_fraction,
            gap_floor=config.numerics.gap_floor,
            hermit_tol=config.numerics.hermit_tol,
        )

@dataclass
class InversionResult:
    """Outcome of solving the connection formula for A_minus_inf."""
    A_minus_inf: np.ndarray
    residual: float
    initial_residual: float
    evaluations: int
    status: int                             # scipy least_squares status; -1 when no solve was needed
    target: float = 0.0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.residual <= self.target
