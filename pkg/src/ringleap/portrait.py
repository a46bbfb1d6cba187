"""Two-ring phase-plane analysis in the reduced variables (eta, xi).

For a pair of rings the momentum P = pi (r(a_1)^2 + r(a_2)^2) is conserved,
so at fixed P the motion is planar in

    eta = pi (r(a_2)^2 - r(a_1)^2) / 2,     xi = z(a_1) - z(a_2),

with pi r(a_1)^2 = P/2 - eta and pi r(a_2)^2 = P/2 + eta.  Trajectories of
the ring system lie on level curves of H_eps(eta, xi); the plane splits
into a central leapfrogging region (closed orbits) and pass-through /
attract-then-repel regions, which this module classifies by direct
integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import IntegratorSettings, _lf_eps_rhs
from .hamiltonian import HamiltonianParams, hamiltonian
from .potential import RingConfig, RingPoint

__all__ = [
    "ReducedPair",
    "LEAPFROGGING",
    "PASS_THROUGH",
    "ATTRACT_THEN_REPEL",
    "UNDETERMINED",
    "REGION_LABELS",
    "reduce_pair",
    "reconstruct_pair",
    "h_on_level",
    "classify",
    "find_period",
]

LEAPFROGGING = "leapfrogging"
PASS_THROUGH = "pass_through"
ATTRACT_THEN_REPEL = "attract_then_repel"
UNDETERMINED = "undetermined"
REGION_LABELS = (LEAPFROGGING, PASS_THROUGH, ATTRACT_THEN_REPEL, UNDETERMINED)


@dataclass(frozen=True)
class ReducedPair:
    """Reduced coordinates of a two-ring state at fixed momentum P."""

    eta: float
    xi: float
    P: float
    epsilon: float = np.nan

    def __post_init__(self):
        if not abs(self.eta) < self.P / 2.0:
            raise ValueError(
                f"|eta| = {abs(self.eta)} must be < P/2 = {self.P / 2}"
            )


def reduce_pair(a1: RingPoint, a2: RingPoint, epsilon: float = np.nan) -> ReducedPair:
    """(eta, xi, P) of a ring pair."""
    p = np.pi * (a1.r**2 + a2.r**2)
    eta = 0.5 * np.pi * (a2.r**2 - a1.r**2)
    return ReducedPair(eta=float(eta), xi=float(a1.z - a2.z), P=float(p),
                       epsilon=epsilon)


def reconstruct_pair(pair: ReducedPair, z2: float = 0.0):
    """Ring pair with the given z(a_2) gauge; inverse of reduce_pair."""
    r1 = np.sqrt((pair.P / 2.0 - pair.eta) / np.pi)
    r2 = np.sqrt((pair.P / 2.0 + pair.eta) / np.pi)
    return RingPoint(float(r1), z2 + pair.xi), RingPoint(float(r2), z2)


def h_on_level(pair: ReducedPair, params: HamiltonianParams) -> float:
    """H_eps on the two-ring state reconstructed with z(a_2) = 0."""
    a1, a2 = reconstruct_pair(pair, z2=0.0)
    rings = RingConfig([a1, a2], params.epsilon)
    return hamiltonian(rings, params)


def _eta_xi_series(ys):
    """(eta, xi) series from raveled two-ring states (n_t, 4)."""
    r1, z1, r2, z2 = ys[:, 0], ys[:, 1], ys[:, 2], ys[:, 3]
    eta = 0.5 * np.pi * (r2**2 - r1**2)
    xi = z1 - z2
    return eta, xi


def _integrate_pair(init: RingConfig, params, budget, settings, dense=False,
                    events=None, max_step=np.inf):
    rhs = _lf_eps_rhs(params)
    y0 = init.as_array().ravel()
    return solve_ivp(
        rhs, (0.0, budget), y0, method="RK45",
        rtol=settings.rel_tol, atol=settings.abs_tol,
        max_step=max_step, dense_output=dense, events=events,
    )


def classify(
    init: RingConfig,
    params: HamiltonianParams,
    budget: float,
    settings: IntegratorSettings = IntegratorSettings(rel_tol=1e-9, abs_tol=1e-11),
    tol_return: float = 1e-4,
    escape_factor: float = 10.0,
) -> str:
    """Label the two-ring initial condition by integrating the ring system.

    leapfrogging: (eta, xi) leaves its start and returns within
    tol_return * scale.  pass_through: eta keeps its sign while |xi| escapes
    beyond escape_factor times its initial size.  attract_then_repel: eta
    changes sign exactly once before the same escape.  undetermined: budget
    exhausted without a verdict.
    """
    if init.n != 2:
        raise ValueError("classify requires exactly two rings")
    ret = _first_return(init, params, budget, settings, tol_return)
    if ret is not None:
        return LEAPFROGGING
    sol = _integrate_pair(init, params, budget, settings, dense=True)
    s_fine = np.linspace(0.0, sol.t[-1], max(2000, sol.t.size * 4))
    eta, xi = _eta_xi_series(sol.sol(s_fine).T)
    p_total = np.pi * np.sum(init.as_array()[:, 0] ** 2)
    xi_ref = np.sqrt(p_total / (2.0 * np.pi))  # radius scale
    escape = escape_factor * max(abs(xi[0]), xi_ref)
    sign_changes = int(
        np.sum(np.diff(np.sign(eta[np.abs(eta) > 1e-12 * p_total])) != 0)
    )
    if abs(xi[-1]) > escape:
        tail_monotone = np.all(np.diff(np.abs(xi[-10:])) > 0)
        if sign_changes == 0 and tail_monotone:
            return PASS_THROUGH
        if sign_changes == 1:
            return ATTRACT_THEN_REPEL
    return UNDETERMINED


def _first_return(init, params, budget, settings, tol_return):
    """Refined first-return time of (eta, xi) to its start, or None.

    Integrates in geometrically growing windows so fast orbits terminate
    after roughly one period: within each window the normalized phase-plane
    distance to the start is sampled finely on the dense solution, and its
    first sub-tolerance local minimum after a clear departure is refined by
    bounded scalar minimization.
    """
    from scipy.optimize import minimize_scalar

    p_total = np.pi * np.sum(init.as_array()[:, 0] ** 2)
    xi_ref = np.sqrt(p_total / (2.0 * np.pi))
    rhs = _lf_eps_rhs(params)
    y = init.as_array().ravel()
    eta0 = 0.5 * np.pi * (y[2] ** 2 - y[0] ** 2)
    xi0 = y[1] - y[3]
    scale = max(np.hypot(eta0 / p_total, xi0 / xi_ref), 1e-3)
    departed = False
    s_start = 0.0
    chunk = 10.0
    while s_start < budget:
        s_stop = min(s_start + chunk, budget)
        sol = solve_ivp(
            rhs, (s_start, s_stop), y, method="RK45",
            rtol=settings.rel_tol, atol=settings.abs_tol,
            dense_output=True,
        )
        if not sol.success or sol.t[-1] <= s_start:
            return None

        def dist(s):
            ys = sol.sol(s)  # shape (4,) or (4, n)
            eta = 0.5 * np.pi * (ys[2] ** 2 - ys[0] ** 2)
            xi = ys[1] - ys[3]
            return np.hypot((eta - eta0) / p_total, (xi - xi0) / xi_ref)

        s_fine = np.linspace(s_start, sol.t[-1], max(4000, sol.t.size * 8))
        d = dist(s_fine)
        k0 = 0
        if not departed:
            past = np.nonzero(d > 10.0 * tol_return * scale)[0]
            if past.size:
                departed = True
                k0 = past[0]
        if departed:
            dd = d[k0:]
            mins = (
                np.nonzero((dd[1:-1] <= dd[:-2]) & (dd[1:-1] <= dd[2:]))[0]
                + 1 + k0
            )
            for k in mins:
                # V-shaped minima are badly under-resolved by sampling, so
                # any clear near-approach is worth refining
                if d[k] > 0.1 * scale:
                    continue
                lo, hi = s_fine[k - 1], s_fine[k + 1]
                res = minimize_scalar(
                    dist, bounds=(lo, hi), method="bounded",
                    options={"xatol": 1e-12 * max(sol.t[-1], 1.0)},
                )
                if res.fun <= tol_return * scale:
                    return float(res.x)
        y = sol.y[:, -1]
        s_start = sol.t[-1]
        chunk *= 2.0
    return None


def find_period(
    init: RingConfig,
    params: HamiltonianParams,
    budget: float,
    settings: IntegratorSettings = IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12),
    tol_return: float = 1e-4,
):
    """First return time of (eta, xi) to its start, or None within budget.

    The normalized phase-plane distance to the initial point is evaluated on
    the dense solution; its first sub-tolerance local minimum after a clear
    departure, refined by bounded scalar minimization, is the period.  (A
    fixed Poincare section xi = xi(0) degenerates when the start is an
    extremum of xi, which happens for every equal-radius configuration, so
    the distance minimum is used for all cases.)
    """
    if init.n != 2:
        raise ValueError("find_period requires exactly two rings")
    return _first_return(init, params, budget, settings, tol_return)
