# isostokes/core/special.py
from __future__ import annotations
from typing import Iterable
import cmath
import math

from .errors import PoleArgument, ZeroArgument

# Lanczos approximation, g = 7, nine coefficients.
LANCZOS_G = 7
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
_LOG_TWO = math.log(2.0)
_POLE_TOL = 1e-14

def branched_log(z: complex) -> complex:
    """
    Logarithm real on the positive axis with the cut along the nonnegative
    imaginary axis; Im takes values in (-3 pi/2, pi/2].

    Points on the cut take the boundary value from the Re(z) > 0 side, so
    log(i y) = ln y + i pi/2 and log(-1) = -i pi.
    """
    z = complex(z)
    if z == 0:
        raise ZeroArgument("branched_log is undefined at 0")
    w = cmath.log(z)
    if w.imag > math.pi / 2:
        w = complex(w.real, w.imag - 2.0 * math.pi)
    return w

def _log_sin_pi(z: complex) -> complex:
    """log(sin(pi z)) modulo 2 pi i, stable for large |Im z|."""
    y = z.imag
    if abs(y) < 20.0:
        return cmath.log(cmath.sin(math.pi * z))
    # sin(pi z) = (e^{i pi z} - e^{-i pi z}) / 2i; keep the dominant exponential factored out.
    if y > 0:
        # dominant term -e^{-i pi z}/(2i)
        rest = 1.0 - cmath.exp(2j * math.pi * z)
        return -1j * math.pi * z - _LOG_TWO + cmath.log(1j) + cmath.log(rest)
    rest = 1.0 - cmath.exp(-2j * math.pi * z)
    return 1j * math.pi * z - _LOG_TWO + cmath.log(-1j) + cmath.log(rest)

def _check_pole(z: complex) -> None:
    if z.real <= _POLE_TOL and abs(z.imag) <= _POLE_TOL:
        nearest = round(z.real)
        if nearest <= 0 and abs(z.real - nearest) <= _POLE_TOL:
            raise PoleArgument(f"log_gamma has a pole at {nearest}", argument=[z.real, z.imag])

def _log_gamma_right(z: complex) -> complex:
    z = z - 1.0
    x = LANCZOS_COEFFICIENTS[0]
    for i in range(1, LANCZOS_G + 2):
        x += LANCZOS_COEFFICIENTS[i] / (z + i)
    t = z + LANCZOS_G + 0.5
    return _HALF_LOG_TWO_PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)

def log_gamma(z: complex) -> complex:
    """
    Principal complex log-Gamma (Lanczos, with reflection for Re z < 1/2).

    The imaginary part is continuous in the right half-plane; on the left the
    reflection formula fixes it modulo 2 pi.
    """
    z = complex(z)
    _check_pole(z)
    if z.real >= 0.5:
        return _log_gamma_right(z)
    # Gamma(z) Gamma(1 - z) = pi / sin(pi z)
    return math.log(math.pi) - _log_sin_pi(z) - _log_gamma_right(1.0 - z)

def gamma(z: complex) -> complex:
    return cmath.exp(log_gamma(z))

def log_gamma_sum(args: Iterable[complex], signs: Iterable[int] | None = None) -> complex:
    """sum of +/- log_gamma(a); Gamma products without overflow."""
    args = list(args)
    signs = [1] * len(args) if signs is None else list(signs)
    total = 0j
    for a, s in zip(args, signs):
        total += s * log_gamma(a)
    return total

def gamma_ratio(numerators: Iterable[complex], denominators: Iterable[complex]) -> complex:
    """prod Gamma(numerators) / prod Gamma(denominators) via summed log_gamma."""
    num = list(numerators)
    den = list(denominators)
    return cmath.exp(log_gamma_sum(num + den, [1] * len(num) + [-1] * len(den)))
