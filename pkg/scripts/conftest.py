# scripts/conftest.py
"""Shared fixtures and hypothesis strategies for the isostokes suites."""
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

# Make the package importable when pytest runs from anywhere
PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from isostokes.core.linalg import random_hermitian, random_regular_point
from isostokes.core.models import StokesOptions

@pytest.fixture
def rng():
    return np.random.default_rng(20240917)

@pytest.fixture
def fast_stokes():
    """Looser Stokes options for the quicker unit suites."""
    return StokesOptions(tol=1e-10, series_order=10)

@pytest.fixture
def hermitian_2x2():
    return np.array([[0.3, 0.4 - 0.2j], [0.4 + 0.2j, -0.5]])

@pytest.fixture
def hermitian_3x3(rng):
    return random_hermitian(rng, 3, 1.0)

@pytest.fixture
def regular_u3(rng):
    return random_regular_point(rng, 3)

def relative_error(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(float(np.abs(b).max()), 1e-300)
    return float(np.abs(a - b).max()) / scale

@st.composite
def hermitian_matrices(draw, min_n: int = 1, max_n: int = 6, max_abs: float = 3.0):
    n = draw(st.integers(min_value=min_n, max_value=max_n))
    values = st.floats(min_value=-max_abs, max_value=max_abs, allow_nan=False, allow_infinity=False, allow_subnormal=False)
    diag = draw(st.lists(values, min_size=n, max_size=n))
    m = n * (n - 1) // 2
    re = draw(st.lists(values, min_size=m, max_size=m))
    im = draw(st.lists(values, min_size=m, max_size=m))
    H = np.diag(np.asarray(diag, dtype=complex))
    iu = np.triu_indices(n, 1)
    H[iu] = np.asarray(re) + 1j * np.asarray(im)
    H[(iu[1], iu[0])] = np.conj(H[iu])
    return H

@st.composite
def regular_points(draw, n: int, min_gap: float = 0.5, max_gap: float = 3.0):
    start = draw(st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
    gaps = draw(st.lists(st.floats(min_value=min_gap, max_value=max_gap, allow_nan=False), min_size=n - 1, max_size=n - 1))
    return start + np.concatenate([[0.0], np.cumsum(gaps)])
