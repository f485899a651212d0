# isostokes/core/linalg.py
"""
Dense complex linear algebra for small Hermitian problems.

Everything here is a pure function of its inputs: identical input bits give
identical output bits, which the report determinism contract relies on.
"""
from __future__ import annotations
from typing import Optional, Sequence
import logging

import numpy as np
from scipy.linalg import expm, lu_factor

from .errors import (
    ConvergenceFailure,
    IndexOutOfRange,
    InputError,
    MismatchedSelection,
    NonHermitianInput,
    NonPositiveBase,
    OverflowRisk,
    WrongDimension,
)
from .models import EigenDecomposition

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * np.pi

# Defaults mirror NumericsSettings; callers holding a config pass them through.
DEFAULT_HERMIT_TOL = 1e-12
DEFAULT_EIG_TOL = 1e-12
DEFAULT_JACOBI_THRESHOLD = 1e-14
DEFAULT_JACOBI_SWEEPS = 30
DEFAULT_EXPM_CAP = 700.0

_PHASE_TIE_RTOL = 1e-12

def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite square complex128 array."""
    arr = np.asarray(M, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise WrongDimension(f"{name} must be a non-empty square matrix, got shape {arr.shape}", shape=list(arr.shape))
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr

def hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)

def hermitian_defect(M: np.ndarray) -> float:
    """max |M_ij - conj(M_ji)|."""
    return float(np.abs(M - M.conj().T).max()) if M.size else 0.0

def check_hermitian(A, hermit_tol: float = DEFAULT_HERMIT_TOL, name: str = "A") -> np.ndarray:
    """
    Validate Hermiticity relative to the Frobenius norm and return the
    exactly Hermitian part.

    Raises:
        NonHermitianInput: If the defect exceeds ``hermit_tol * ||A||``.
    """
    arr = as_matrix(A, name)
    scale = max(float(np.linalg.norm(arr)), np.finfo(float).tiny)
    defect = hermitian_defect(arr)
    if defect > hermit_tol * scale:
        raise NonHermitianInput(
            f"{name} is not Hermitian: defect {defect:.3e} exceeds {hermit_tol:.1e} relative",
            defect=defect,
            tolerance=hermit_tol,
        )
    return hermitian_part(arr)

def _jacobi_unitary(app: float, aqq: float, beta: complex) -> np.ndarray:
    # Phase rotation makes the pivot real; a real Jacobi rotation then zeroes it.
    mag = abs(beta)
    phase = beta / mag
    theta = (aqq - app) / (2.0 * mag)
    if abs(theta) > 1e150:
        t = 1.0 / (2.0 * theta)
    else:
        t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    ph = np.conj(phase)
    return np.array([[c, s], [-s * ph, c * ph]])

def _fix_phases(V: np.ndarray) -> np.ndarray:
    for j in range(V.shape[1]):
        col = V[:, j]
        mags = np.abs(col)
        top = mags.max()
        idx = int(np.flatnonzero(mags >= top * (1.0 - _PHASE_TIE_RTOL))[0])
        V[:, j] = col * (np.conj(col[idx]) / mags[idx])
        V[idx, j] = V[idx, j].real
    return V

def herm_eigen(
    A,
    hermit_tol: float = DEFAULT_HERMIT_TOL,
    eig_tol: float = DEFAULT_EIG_TOL,
    threshold: float = DEFAULT_JACOBI_THRESHOLD,
    max_sweeps: int = DEFAULT_JACOBI_SWEEPS,
    extended_precision: bool = False,
) -> EigenDecomposition:
    """
    Hermitian eigendecomposition by cyclic complex Jacobi rotations.

    Args:
        A: Hermitian matrix
        hermit_tol: Hermiticity tolerance relative to ||A||_F
        eig_tol: Residual tolerance ||AV - V diag(w)|| <= eig_tol ||A||
        threshold: Off-diagonal Frobenius stop criterion relative to ||A||_F
        max_sweeps: Sweep cap
        extended_precision: Rotate in numpy.clongdouble

    Returns:
        EigenDecomposition with ascending values and phase-fixed vectors

    Raises:
        NonHermitianInput: If A is not Hermitian
        ConvergenceFailure: If the sweep cap is reached
    """
    H = check_hermitian(A, hermit_tol)
    n = H.shape[0]
    dtype = np.clongdouble if extended_precision else np.complex128
    work = H.astype(dtype)
    V = np.eye(n, dtype=dtype)
    scale = float(np.linalg.norm(H))
    stop = threshold * scale

    sweeps = 0
    while True:
        off = float(np.sqrt(np.sum(np.abs(work - np.diag(np.diag(work))) ** 2)))
        if off <= stop:
            break
        if sweeps >= max_sweeps:
            raise ConvergenceFailure(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps",
                off_diagonal=off,
                sweeps=sweeps,
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                beta = work[p, q]
                if beta == 0:
                    continue
                U = _jacobi_unitary(float(work[p, p].real), float(work[q, q].real), complex(beta)).astype(dtype)
                idx = [p, q]
                work[:, idx] = work[:, idx] @ U
                work[idx, :] = U.conj().T @ work[idx, :]
                work[p, q] = 0
                work[q, p] = 0
                work[p, p] = work[p, p].real
                work[q, q] = work[q, q].real
                V[:, idx] = V[:, idx] @ U

    values = np.real(np.diag(work)).astype(np.float64)
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = _fix_phases(np.asarray(V[:, order], dtype=np.complex128))

    residual = float(np.linalg.norm(H @ vectors - vectors * values))
    if residual > eig_tol * max(scale, np.finfo(float).tiny) and scale > 0:
        raise ConvergenceFailure(
            f"Eigen residual {residual:.3e} exceeds {eig_tol:.1e} relative",
            residual=residual,
        )
    logger.debug(f"Jacobi converged: n={n} sweeps={sweeps} residual={residual:.2e}")
    return EigenDecomposition(values=values, vectors=vectors)

def is_hermitian_or_skew(M: np.ndarray, tol: float = 1e-13) -> Optional[int]:
    """+1 for Hermitian, -1 for anti-Hermitian, None otherwise (relative tol)."""
    scale = max(float(np.linalg.norm(M)), np.finfo(float).tiny)
    if np.linalg.norm(M - M.conj().T) <= tol * scale:
        return 1
    if np.linalg.norm(M + M.conj().T) <= tol * scale:
        return -1
    return None

def matrix_exp(M, norm_cap: float = DEFAULT_EXPM_CAP) -> np.ndarray:
    """
    exp(M). Hermitian and anti-Hermitian inputs go through the eigen route;
    everything else through scaling-and-squaring Pade (scipy.linalg.expm).

    Raises:
        OverflowRisk: If ||M||_2 exceeds ``norm_cap``.
    """
    arr = as_matrix(M, "M")
    norm = float(np.linalg.norm(arr, 2))
    if norm > norm_cap:
        raise OverflowRisk(f"||M|| = {norm:.3e} exceeds the exponential cap {norm_cap}", norm=norm, cap=norm_cap)
    if not np.any(arr):
        return np.eye(arr.shape[0], dtype=complex)
    if np.count_nonzero(arr - np.diag(np.diag(arr))) == 0:
        return np.diag(np.exp(np.diag(arr)))
    kind = is_hermitian_or_skew(arr)
    if kind == 1:
        eig = herm_eigen(arr)
        return (eig.vectors * np.exp(eig.values)) @ eig.vectors.conj().T
    if kind == -1:
        # M = i H with H Hermitian
        eig = herm_eigen(-1j * arr)
        return (eig.vectors * np.exp(1j * eig.values)) @ eig.vectors.conj().T
    return expm(arr)

def scaled_power(M, x: float, s: complex, eig: Optional[EigenDecomposition] = None) -> np.ndarray:
    """
    x^{sM} = exp(ln(x) s M) for Hermitian M and positive real x.

    A precomputed decomposition of M may be passed to skip the eigensolve.
    """
    if not x > 0:
        raise NonPositiveBase(f"scaled_power needs a positive base, got {x}", base=x)
    if eig is None:
        eig = herm_eigen(M)
    return (eig.vectors * np.exp(np.log(x) * s * eig.values)) @ eig.vectors.conj().T

def log_power(M, log_x: complex, s: complex, eig: Optional[EigenDecomposition] = None) -> np.ndarray:
    """exp(log_x s M) for Hermitian M and an explicitly chosen logarithm of the base."""
    if eig is None:
        eig = herm_eigen(M)
    return (eig.vectors * np.exp(log_x * s * eig.values)) @ eig.vectors.conj().T

def delta_k(A, k: int) -> np.ndarray:
    """Keep the upper-left k x k block and the diagonal; zero the rest."""
    arr = as_matrix(A, "A")
    n = arr.shape[0]
    if not 0 <= k <= n:
        raise IndexOutOfRange(f"k must lie in [0, {n}], got {k}", k=k, n=n)
    out = np.diag(np.diag(arr)).astype(complex)
    out[:k, :k] = arr[:k, :k]
    return out

def eta_k(A, k: int) -> np.ndarray:
    """Keep the lower-right k x k block and the diagonal; zero the rest."""
    arr = as_matrix(A, "A")
    n = arr.shape[0]
    if not 0 <= k <= n:
        raise IndexOutOfRange(f"k must lie in [0, {n}], got {k}", k=k, n=n)
    out = np.diag(np.diag(arr)).astype(complex)
    if k:
        out[n - k:, n - k:] = arr[n - k:, n - k:]
    return out

def minor_det(M, rows: Sequence[int], cols: Sequence[int]) -> complex:
    """
    Determinant of M restricted to 0-based ``rows`` x ``cols``, LU with
    partial pivoting. The empty selection has determinant 1.
    """
    arr = as_matrix(M, "M")
    n = arr.shape[0]
    rows = list(rows)
    cols = list(cols)
    if len(rows) != len(cols):
        raise MismatchedSelection(
            f"row and column selections differ in size ({len(rows)} vs {len(cols)})",
            rows=rows,
            cols=cols,
        )
    for idx in rows + cols:
        if not 0 <= idx < n:
            raise IndexOutOfRange(f"index {idx} outside [0, {n})", index=idx, n=n)
    if not rows:
        return 1.0 + 0.0j
    sub = arr[np.ix_(rows, cols)]
    lu, piv = lu_factor(sub, check_finite=False)
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    det = np.prod(np.diag(lu))
    return complex(-det if swaps % 2 else det)

def antidiag_P(n: int) -> np.ndarray:
    """Anti-diagonal permutation (ones at (i, n+1-i)); an involution."""
    return np.eye(n, dtype=complex)[::-1].copy()

def p_flip(M: np.ndarray) -> np.ndarray:
    """P M P, i.e. (i, j) -> (n+1-i, n+1-j)."""
    return M[::-1, ::-1].copy()

def perm_matrix(sigma: Sequence[int]) -> np.ndarray:
    """Permutation matrix with ones at (sigma(i), i) (0-based)."""
    n = len(sigma)
    if sorted(sigma) != list(range(n)):
        raise InputError(f"not a permutation of 0..{n - 1}: {list(sigma)}")
    P = np.zeros((n, n), dtype=complex)
    P[list(sigma), list(range(n))] = 1.0
    return P

def random_hermitian(rng: np.random.Generator, n: int, norm: float = 1.0) -> np.ndarray:
    """Random Hermitian matrix scaled to the given Frobenius norm."""
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = hermitian_part(G)
    fro = np.linalg.norm(H)
    return H * (norm / fro) if fro > 0 else H

def random_regular_point(rng: np.random.Generator, n: int, gap_range: tuple[float, float] = (0.5, 3.0), start: float = 0.0) -> np.ndarray:
    """Increasing coordinates with gaps drawn uniformly from ``gap_range``."""
    lo, hi = gap_range
    gaps = rng.uniform(lo, hi, size=max(n - 1, 0))
    return start + np.concatenate([[0.0], np.cumsum(gaps)])

def hermitian_to_params(H: np.ndarray) -> np.ndarray:
    """n^2 real coordinates: the diagonal, then Re and Im of the strict upper triangle."""
    n = H.shape[0]
    iu = np.triu_indices(n, 1)
    upper = H[iu]
    return np.concatenate([np.real(np.diag(H)), upper.real, upper.imag])

def params_to_hermitian(x: np.ndarray, n: int) -> np.ndarray:
    """Inverse of ``hermitian_to_params``."""
    iu = np.triu_indices(n, 1)
    m = iu[0].size
    H = np.diag(np.asarray(x[:n], dtype=complex))
    upper = x[n:n + m] + 1j * x[n + m:n + 2 * m]
    H[iu] = upper
    H[(iu[1], iu[0])] = upper.conj()
    return H

def random_straight_path(rng: np.random.Generator, n: int, length: float = 1.0,
                         gap_range: tuple[float, float] = (0.5, 3.0), start: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """
    Random regular point and the end of a straight path of the given length
    from it. The direction has ascending components, so no gap shrinks.
    """
    u0 = random_regular_point(rng, n, gap_range, start)
    d = np.sort(rng.standard_normal(n))
    norm = float(np.linalg.norm(d))
    d = d / norm if norm > 0 else np.full(n, 1.0 / np.sqrt(n))
    return u0, u0 + length * d
