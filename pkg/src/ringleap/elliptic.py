"""Complete elliptic integrals K(m), E(m) and their derivatives.

Parameter convention: everything here takes the *parameter* m = k^2, not the
modulus k.  In the formulas of the vortex-ring potential the combination
k^2 = 4 r(a) r / ((r(a)+r)^2 + (z-z(a))^2) appears, and K, E are always
evaluated at that squared quantity.

Naming caveat: the literature sometimes swaps which of E and K is called
"first kind".  Here K(m) is the integral that diverges logarithmically as
m -> 1 (first kind in the usual naming) and E(m) the one with
E(0) = pi/2, E(1) = 1 (second kind).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EllipticPair", "elliptic_pair", "elliptic_derivatives", "agm_pair"]

# AGM iteration control: the gap |a_n - b_n| contracts quadratically, so 64
# iterations is far beyond what double precision ever needs.  Hitting the cap
# means something is numerically wrong and must not pass silently.
_MAX_ITER = 64
_AGM_TOL = 1e-16

# Below this distance from m = 1 the subtraction (2-k^2)K - 2E downstream
# loses all digits; switch to the logarithmic expansion.
_NEAR_ONE = 1e-12


@dataclass(frozen=True)
class EllipticPair:
    """K(m) and E(m) at a common parameter m = k^2 in [0, 1)."""

    k_complete: float
    e_complete: float
    m: float


def _near_one_expansion(m):
    """Logarithmic expansions of K, E for 1 - m << 1.

    K(m) = log(4/sqrt(1-m)) + (1-m)/4 (log(4/sqrt(1-m)) - 1) + O((1-m)^2 log)
    E(m) = 1 + (1-m)/2 (log(4/sqrt(1-m)) - 1/2) + O((1-m)^2 log)
    """
    m1 = 1.0 - np.asarray(m, dtype=float)
    lam = np.log(4.0) - 0.5 * np.log(m1)
    k = lam + 0.25 * m1 * (lam - 1.0)
    e = 1.0 + 0.5 * m1 * (lam - 0.5)
    return k, e


def agm_pair(m):
    """Vectorized AGM evaluation of (K(m), E(m)) for m in [0, 1).

    Accepts scalars or ndarrays; no domain validation (see elliptic_pair for
    the checked public entry point).  Values with 1 - m < 1e-12 are routed to
    the logarithmic asymptotic expansion.
    """
    m = np.asarray(m, dtype=float)
    scalar = m.ndim == 0
    m = np.atleast_1d(m)

    k_out = np.empty_like(m)
    e_out = np.empty_like(m)

    near = (1.0 - m) < _NEAR_ONE
    if np.any(near):
        kn, en = _near_one_expansion(m[near])
        k_out[near] = kn
        e_out[near] = en

    rest = ~near
    if np.any(rest):
        mr = m[rest]
        a = np.ones_like(mr)
        b = np.sqrt(1.0 - mr)
        c2_sum = mr.copy()  # sum of 2^n c_n^2, starting with c_0^2 = m
        pow2 = 1.0
        for _ in range(_MAX_ITER):
            c = 0.5 * (a - b)
            a, b = 0.5 * (a + b), np.sqrt(a * b)
            pow2 *= 2.0
            c2_sum += pow2 * c * c
            if np.max(np.abs(c)) < _AGM_TOL:
                break
        else:
            raise ArithmeticError("AGM failed to converge within 64 iterations")
        k = 0.5 * np.pi / a
        k_out[rest] = k
        e_out[rest] = k * (1.0 - 0.5 * c2_sum)

    if scalar:
        return float(k_out[0]), float(e_out[0])
    return k_out, e_out


def elliptic_pair(m: float) -> EllipticPair:
    """K(m) and E(m) for m in [0, 1), relative accuracy ~1e-15.

    Raises ValueError outside the domain (K diverges at m = 1).
    """
    m = float(m)
    if not 0.0 <= m < 1.0:
        raise ValueError(f"elliptic parameter m must lie in [0, 1), got {m}")
    k, e = agm_pair(m)
    return EllipticPair(k_complete=k, e_complete=e, m=m)


def elliptic_derivatives(m: float):
    """(dK/dm, dE/dm) for m in (0, 1), from the closed forms

        dK/dm = (E - (1-m) K) / (2 m (1-m)),    dE/dm = (E - K) / (2 m).
    """
    m = float(m)
    if not 0.0 < m < 1.0:
        raise ValueError(f"elliptic parameter m must lie in (0, 1), got {m}")
    k, e = agm_pair(m)
    dk = (e - (1.0 - m) * k) / (2.0 * m * (1.0 - m))
    de = (e - k) / (2.0 * m)
    return dk, de


def agm_derivatives(m):
    """Vectorized (dK/dm, dE/dm); no domain checks."""
    k, e = agm_pair(m)
    m = np.asarray(m, dtype=float)
    dk = (e - (1.0 - m) * k) / (2.0 * m * (1.0 - m))
    de = (e - k) / (2.0 * m)
    return dk, de
