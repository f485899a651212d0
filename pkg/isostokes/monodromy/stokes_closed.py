# isostokes/monodromy/stokes_closed.py
"""
Closed-form first off-diagonals of the Stokes matrices of the solution with
asymptotic data A_inf in the plus caterpillar zone, in terms of the
Gelfand-Tsetlin eigenvalue triangle of A_inf.
"""
from __future__ import annotations
from typing import List, Optional, Union
import cmath
import logging

import numpy as np

from ..core.errors import DegenerateSpectrum, IndexOutOfRange
from ..core.linalg import TWO_PI_I, check_hermitian, herm_eigen, minor_det
from ..core.models import GTPattern, PrefactorConvention, StokesPair, SubdiagonalData
from ..core.special import log_gamma_sum

logger = logging.getLogger(__name__)

DEFAULT_GENERICITY_RTOL = 1e-8

def gt_pattern(A, hermit_tol: float = 1e-12) -> GTPattern:
    """
    Ascending eigenvalues of every leading principal submatrix, plus the
    extension values lambda^{(k)}_{k+1} = tr A_{k+1} - tr A_k read off the
    level sums.
    """
    H = check_hermitian(A, hermit_tol)
    n = H.shape[0]
    levels = tuple(herm_eigen(H[:k, :k], hermit_tol=hermit_tol).values for k in range(1, n + 1))
    sums = [0.0] + [float(level.sum()) for level in levels]
    extensions = tuple(sums[k + 1] - sums[k] for k in range(n))
    return GTPattern(levels=levels, extensions=extensions)

def default_genericity_tol(pat: GTPattern) -> float:
    if pat.n == 0:
        return DEFAULT_GENERICITY_RTOL
    top = pat.level(pat.n)
    return DEFAULT_GENERICITY_RTOL * max(1.0, float(top[-1] - top[0]))

def genericity_check(pat: GTPattern, tol: Optional[float] = None) -> Optional[DegenerateSpectrum]:
    """
    None when every level has simple spectrum, otherwise the failure
    descriptor for the first offending level (1-based level, 0-based indices).
    """
    tol = default_genericity_tol(pat) if tol is None else tol
    for k in range(2, pat.n + 1):
        gaps = np.diff(pat.level(k))
        i = int(np.argmin(gaps))
        if gaps[i] < tol:
            return DegenerateSpectrum(
                f"level {k} has eigenvalues {gaps[i]:.3e} apart (tolerance {tol:.1e})",
                level=k,
                indices=(i, i + 1),
                gap=float(gaps[i]),
            )
    return None

def _require_generic(pat: GTPattern, tol: Optional[float]) -> None:
    failure = genericity_check(pat, tol)
    if failure is not None:
        raise failure

def m_coeff(A, pat: GTPattern, k: int, i: int) -> complex:
    """
    m^{(k)}_i for 1 <= i <= k <= n - 1 (1-based, as in the GT indexing):

        sum_j (-1)^{k-j} det[(lam Id - A)_{rows {1..k}\\{j}, cols {1..k-1}}]
              / prod_{l != i} (lam - lam^{(k)}_l) * A_{j, k+1},   lam = lam^{(k)}_i
    """
    H = np.asarray(A, dtype=complex)
    n = H.shape[0]
    if not 1 <= k <= n - 1 or not 1 <= i <= k:
        raise IndexOutOfRange(f"need 1 <= i <= k <= n-1, got k={k}, i={i}, n={n}", k=k, i=i, n=n)
    level = pat.level(k)
    lam = float(level[i - 1])
    others = np.delete(level, i - 1)
    denom = complex(np.prod(lam - others)) if others.size else 1.0 + 0j
    if denom == 0:
        raise DegenerateSpectrum(f"level {k} is degenerate at index {i}", level=k, indices=(i - 1, i - 1))
    shifted = lam * np.eye(n, dtype=complex) - H
    cols = list(range(k - 1))
    total = 0j
    for j in range(1, k + 1):
        a = H[j - 1, k]
        if a == 0:
            continue
        rows = [r for r in range(k) if r != j - 1]
        total += (-1) ** (k - j) * minor_det(shifted, rows, cols) * a
    return total / denom

def _prefactor_exponent(pat: GTPattern, k: int, convention: PrefactorConvention) -> float:
    # lambda^{(k-1)}_k and lambda^{(k)}_{k+1}
    lower = pat.extensions[k - 1]
    upper = pat.extensions[k]
    if convention is PrefactorConvention.PRINTED:
        return (lower - upper) / 4.0
    return (lower + upper) / 4.0

def _gamma_weight(pat: GTPattern, k: int, i: int, sign: int) -> complex:
    """
    prod_{l != i} Gamma(1 + s d^{(k)}_l)^2
        / prod_{l <= k+1} Gamma(1 + s d^{(k+1)}_l) / prod_{l <= k-1} Gamma(1 + s d^{(k-1)}_l)

    with d^{(m)}_l = (lam^{(m)}_l - lam^{(k)}_i) / 2 pi i and s = sign.
    """
    lam = pat.level(k)[i - 1]
    same = [lam_l for l, lam_l in enumerate(pat.level(k), start=1) if l != i]
    args: List[complex] = []
    signs: List[int] = []
    for lam_l in same:
        args.append(1 + sign * (lam_l - lam) / TWO_PI_I)
        signs.append(2)
    for lam_l in pat.level(k + 1):
        args.append(1 + sign * (lam_l - lam) / TWO_PI_I)
        signs.append(-1)
    for lam_l in pat.level(k - 1):
        args.append(1 + sign * (lam_l - lam) / TWO_PI_I)
        signs.append(-1)
    return cmath.exp(log_gamma_sum(args, signs))

def closed_subdiagonals(A_inf,
                        convention: PrefactorConvention = PrefactorConvention.SUM,
                        genericity_tol: Optional[float] = None,
                        hermit_tol: float = 1e-12) -> SubdiagonalData:
    """
    (S_+)_{k,k+1} and (S_-)_{k+1,k}, k = 1..n-1, for the plus-zone solution
    with asymptotic data A_inf.

    Every Gamma argument is 1 + (imaginary) for real GT values, so no pole is
    ever hit. The minus entries use Gamma(1 - .) and conj(m), which makes them
    the complex conjugates of the plus entries.

    Raises:
        DegenerateSpectrum: If a GT level has a repeated eigenvalue
    """
    H = check_hermitian(A_inf, hermit_tol)
    n = H.shape[0]
    if n < 2:
        return SubdiagonalData(s_plus=np.zeros(0, dtype=complex), s_minus=np.zeros(0, dtype=complex))
    pat = gt_pattern(H, hermit_tol)
    _require_generic(pat, genericity_tol)

    s_plus = np.zeros(n - 1, dtype=complex)
    s_minus = np.zeros(n - 1, dtype=complex)
    for k in range(1, n):
        pref = np.exp(_prefactor_exponent(pat, k, convention))
        plus = 0j
        minus = 0j
        for i in range(1, k + 1):
            m = m_coeff(H, pat, k, i)
            if m == 0:
                continue
            plus += _gamma_weight(pat, k, i, +1) * m
            minus += _gamma_weight(pat, k, i, -1) * np.conj(m)
        s_plus[k - 1] = pref * plus
        s_minus[k - 1] = pref * minus
    logger.debug(f"Closed-form sub-diagonals for n={n}: |s_plus| = {np.abs(s_plus)}")
    return SubdiagonalData(s_plus=s_plus, s_minus=s_minus)

def closed_stokes_band(A_inf, convention: PrefactorConvention = PrefactorConvention.SUM) -> StokesPair:
    """
    Band part of the Stokes pair: diagonal e^{[A]/2} and the first
    off-diagonals from ``closed_subdiagonals``. Exact for n <= 2.
    """
    H = check_hermitian(A_inf)
    n = H.shape[0]
    sub = closed_subdiagonals(H, convention)
    D = np.diag(np.exp(np.real(np.diag(H)) / 2)).astype(complex)
    S_plus = D.copy()
    S_minus = D.copy()
    idx = np.arange(n - 1)
    S_plus[idx, idx + 1] = sub.s_plus
    S_minus[idx + 1, idx] = sub.s_minus
    return StokesPair(S_plus=S_plus, S_minus=S_minus, sigma=tuple(range(n)), diagnostics={"source": "closed_form"})

def transform_minus(S: Union[StokesPair, SubdiagonalData]) -> Union[StokesPair, SubdiagonalData]:
    """
    M -> P M P with the plus and minus roles swapped. Turns data of the
    plus-zone solution for P A P into data of the minus-zone solution for A,
    and back.
    """
    if isinstance(S, (StokesPair, SubdiagonalData)):
        return S.flipped()
    raise TypeError(f"transform_minus expects StokesPair or SubdiagonalData, got {type(S).__name__}")

def subdiagonals_of(pair: StokesPair) -> SubdiagonalData:
    """First off-diagonals of a (sorted-frame) Stokes pair."""
    n = pair.n
    idx = np.arange(n - 1)
    return SubdiagonalData(s_plus=pair.S_plus[idx, idx + 1].copy(), s_minus=pair.S_minus[idx + 1, idx].copy())
