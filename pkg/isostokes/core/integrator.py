# isostokes/core/integrator.py
"""
Embedded Dormand-Prince 5(4) integrator for complex array-valued ODEs.

Used for both the isomonodromy flow (matrix state along a path in u) and the
linear system in z (fundamental matrix along a continuation contour).
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple
import logging

import numpy as np

from .errors import StepSizeUnderflow, ToleranceNotMet
from .models import IntegrationDiagnostics

logger = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]
Projection = Callable[[np.ndarray], np.ndarray]

# Butcher tableau
C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# B5 - B4
E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# projection corrections below this (relative) are rounding
_ROUNDING = 16 * np.finfo(float).eps

@dataclass
class StepControl:
    """PI step-size controller constants."""
    beta: float = 0.04
    safety: float = 0.9
    min_factor: float = 0.1
    max_factor: float = 5.0

    @property
    def alpha(self) -> float:
        return 0.2 - 0.75 * self.beta

@dataclass
class IntegrationResult:
    y: np.ndarray
    diagnostics: IntegrationDiagnostics
    steps: List[Tuple[float, np.ndarray]] = field(default_factory=list)
    last_step: float = 0.0

class DormandPrince54:
    """
    Adaptive DP5(4) with FSAL, RMS error norm and PI step control.

    ``projection`` is applied to every accepted state; the size of the
    correction is recorded and must stay within 10 * tol.
    """

    def __init__(self,
                 rhs: RHS,
                 tol: float = 1e-10,
                 max_steps: int = 200000,
                 h_min_fraction: float = 1e-14,
                 projection: Optional[Projection] = None,
                 control: Optional[StepControl] = None):
        self.rhs = rhs
        self.atol = tol
        self.rtol = tol
        self.tol = tol
        self.max_steps = max_steps
        self.h_min_fraction = h_min_fraction
        self.projection = projection
        self.control = control or StepControl()

    def _error_norm(self, err: np.ndarray, y0: np.ndarray, y1: np.ndarray) -> float:
        scale = self.atol + self.rtol * np.maximum(np.abs(y0), np.abs(y1))
        return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))

    def _initial_step(self, t0: float, y0: np.ndarray, f0: np.ndarray, span: float) -> float:
        d0 = float(np.sqrt(np.mean(np.abs(y0) ** 2)))
        d1 = float(np.sqrt(np.mean(np.abs(f0) ** 2)))
        if d0 < 1e-5 or d1 < 1e-5:
            h = 1e-6 * span
        else:
            h = 0.01 * d0 / d1
        return min(max(h, 1e-6 * span), span)

    def integrate(self,
                  y0: np.ndarray,
                  t0: float,
                  t1: float,
                  h0: Optional[float] = None,
                  record_steps: bool = False) -> IntegrationResult:
        """
        Integrate from t0 to t1 (t1 > t0).

        Raises:
            StepSizeUnderflow: If the step drops below ``h_min_fraction * (t1 - t0)``
            ToleranceNotMet: If the step budget runs out or the projection
                correction exceeds 10 * tol
        """
        span = t1 - t0
        diag = IntegrationDiagnostics()
        y = np.array(y0, dtype=complex)
        if span <= 0:
            return IntegrationResult(y=y, diagnostics=diag)

        h_min = self.h_min_fraction * span
        ctl = self.control
        k1 = self.rhs(t0, y)
        diag.function_evaluations += 1
        h = min(h0, span) if h0 else self._initial_step(t0, y, k1, span)
        t = t0
        err_prev = 1e-4
        steps: List[Tuple[float, np.ndarray]] = [(t0, y.copy())] if record_steps else []

        while t < t1:
            if diag.accepted_steps + diag.rejected_steps >= self.max_steps:
                raise ToleranceNotMet(
                    f"Step budget of {self.max_steps} exhausted at t={t:.6g}",
                    t=t,
                    steps=self.max_steps,
                )
            last = t + h >= t1
            if last:
                h = t1 - t
            if h < h_min and not last:
                raise StepSizeUnderflow(f"Step size {h:.3e} underflow at t={t:.6g}", t=t, step=h)

            ks = [k1]
            for i in range(1, 7):
                yi = y + h * sum(a * k for a, k in zip(A[i], ks) if a != 0.0)
                ks.append(self.rhs(t + C[i] * h, yi))
            diag.function_evaluations += 6
            y_new = y + h * sum(b * k for b, k in zip(B5, ks) if b != 0.0)
            err_vec = h * sum(e * k for e, k in zip(E, ks) if e != 0.0)
            err = self._error_norm(err_vec, y, y_new)

            if not np.isfinite(err):
                diag.rejected_steps += 1
                h *= ctl.min_factor
                if h < h_min:
                    raise StepSizeUnderflow(f"Non-finite state near t={t:.6g}", t=t, step=h)
                continue

            if err <= 1.0:
                t = t1 if last else t + h
                if self.projection is not None:
                    y_proj = self.projection(y_new)
                    correction = float(np.abs(y_proj - y_new).max())
                    diag.max_projection_correction = max(diag.max_projection_correction, correction)
                    if correction > 10.0 * self.tol:
                        raise ToleranceNotMet(
                            f"Projection correction {correction:.3e} exceeds 10*tol at t={t:.6g}",
                            t=t,
                            correction=correction,
                        )
                    y_new = y_proj
                y = y_new
                if self.projection is not None and correction > _ROUNDING * max(1.0, float(np.abs(y).max())):
                    # first-same-as-last stage belongs to the unprojected state
                    k1 = self.rhs(t, y)
                    diag.function_evaluations += 1
                else:
                    k1 = ks[6]
                diag.accepted_steps += 1
                diag.max_error_estimate = max(diag.max_error_estimate, err * self.tol)
                diag.min_step = min(diag.min_step, h)
                if record_steps:
                    steps.append((t, y.copy()))
                fac = ctl.safety * max(err, 1e-10) ** (-ctl.alpha) * err_prev ** ctl.beta
                fac = min(ctl.max_factor, max(ctl.min_factor, fac))
                err_prev = max(err, 1e-4)
                h *= fac
            else:
                diag.rejected_steps += 1
                fac = max(ctl.min_factor, ctl.safety * err ** (-0.2))
                h *= fac
                if h < h_min:
                    raise StepSizeUnderflow(f"Step size {h:.3e} underflow at t={t:.6g}", t=t, step=h)

        logger.debug(
            f"DP54 [{t0:.4g}, {t1:.4g}]: {diag.accepted_steps} accepted, "
            f"{diag.rejected_steps} rejected, max err {diag.max_error_estimate:.2e}"
        )
        return IntegrationResult(y=y, diagnostics=diag, steps=steps, last_step=h)
