"""Shared fixtures and oracles for the test suite."""

import numpy as np
import pytest


def series_k_e(m, tol=1e-18):
    """Independent Maclaurin-series oracle for (K(m), E(m)).

    K(m) = (pi/2) sum c_n m^n with c_n = ((2n-1)!!/(2n)!!)^2 and
    E(m) = (pi/2) sum c_n m^n / (1 - 2n).  Terms are accumulated until the
    worst-case remaining term is below tol; converges (slowly) on [0, 1).
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    m_max = float(m.max())
    if not 0.0 <= m_max < 1.0:
        raise ValueError("series oracle requires m in [0, 1)")
    k = np.ones_like(m)
    e = np.ones_like(m)
    c = 1.0
    p = np.ones_like(m)
    n = 0
    while True:
        n += 1
        c *= ((2 * n - 1) / (2 * n)) ** 2
        p = p * m
        term = c * p
        k += term
        e += term / (1 - 2 * n)
        if c * m_max**n < tol and n > 4:
            break
        if n > 200000:  # pragma: no cover - safety valve
            raise RuntimeError("series oracle failed to converge")
    return 0.5 * np.pi * k, 0.5 * np.pi * e


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260826)


@pytest.fixture(scope="session")
def profile():
    from ringleap.field import solve_profile

    return solve_profile(1e-8)
