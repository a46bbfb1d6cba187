"""Time integration of the ring system and its rescaled planar limit.

The ring cores a_i(s) move by

    (d/ds) a_i = (1 / (pi |log eps|)) J_i grad_{a_i} H_eps,
    J_i = [[0, -1/r(a_i)], [1/r(a_i), 0]],

in the rescaled time s = t |log eps|.  The blow-up positions
b_i = sqrt(|log eps|) (a_i - (r0, z0 + s/r0)) satisfy, in the limit, the
planar point-vortex system

    (d/ds) b_i = c sum_{j != i} (b_i - b_j)^perp / |b_i - b_j|^2
                 - (r(b_i)/r0^2) (0, 1),

whose Hamiltonian is W and whose second invariant is Q.  The perp rotation
and the interaction coefficient c are integrator settings; their defaults
(clockwise rotation, c = 2) are the unique combination under which the
rescaled ring trajectories converge to the planar ones, which is verified by
the calibration test in the suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .hamiltonian import (
    HamiltonianParams,
    ReducedConfig,
    h_and_grad_arrays,
    reduced_invariants,
)
from .potential import RingConfig, RingPoint

__all__ = [
    "Trajectory",
    "IntegratorSettings",
    "IntegrationError",
    "integrate_lf_eps",
    "integrate_lf",
    "lift",
    "rescale_to_plane",
    "trajectory_distance",
    "write_trajectory_csv",
    "read_trajectory_csv",
]


class IntegrationError(RuntimeError):
    """Integrator failure; carries the last good partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances, scheme selection and the planar-system conventions.

    scheme: 'adaptive_embedded' (Dormand-Prince 5(4)) or 'implicit_midpoint'
    (fixed step = max_step, for long-time conservation studies).
    perp_convention: 'rot_minus' maps v to (v_y, -v_x) (clockwise),
    'rot_plus' to (-v_y, v_x).  interaction_coefficient scales the pair term
    of the planar system only.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    scheme: str = "adaptive_embedded"
    perp_convention: str = "rot_minus"
    interaction_coefficient: float = 2.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.scheme not in ("adaptive_embedded", "implicit_midpoint"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.perp_convention not in ("rot_plus", "rot_minus"):
            raise ValueError(
                f"unknown perp_convention {self.perp_convention!r}"
            )
        if self.scheme == "implicit_midpoint" and not np.isfinite(self.max_step):
            raise ValueError("implicit_midpoint requires a finite max_step")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: times s_k, states, and per-time invariants.

    kind is 'rings' (states are RingConfig, invariants (H_eps, P)) or
    'reduced' (states are ReducedConfig, invariants (W, Q)).  status is
    'completed', 'near_collision' or 'small_radius'.
    """

    times: np.ndarray
    states: tuple
    invariants_series: np.ndarray
    kind: str
    status: str = "completed"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0) and np.any(np.diff(t) >= 0):
            # allow strictly monotone in either direction (backward runs)
            if not (np.all(np.diff(t) > 0) or np.all(np.diff(t) < 0)):
                raise ValueError("times must be strictly monotone")
        object.__setattr__(self, "times", t)
        object.__setattr__(
            self, "invariants_series", np.asarray(self.invariants_series)
        )

    @property
    def n_points(self) -> int:
        return len(self.states[0].points) if self.kind == "rings" else self.states[0].n

    def positions(self):
        """(n_times, n, 2) array of point coordinates."""
        if self.kind == "rings":
            return np.array([s.as_array() for s in self.states])
        return np.array([s.as_array() for s in self.states])

    def final_state(self):
        return self.states[-1]


def _perp(v, convention: str):
    out = np.empty_like(v)
    if convention == "rot_plus":
        out[..., 0] = -v[..., 1]
        out[..., 1] = v[..., 0]
    else:
        out[..., 0] = v[..., 1]
        out[..., 1] = -v[..., 0]
    return out


def _lf_eps_rhs(params: HamiltonianParams):
    pil = np.pi * params.log_eps

    def rhs(s, y):
        pts = y.reshape(-1, 2)
        r = pts[:, 0]
        _, grad = h_and_grad_arrays(r, pts[:, 1], params.epsilon, params.gamma)
        out = np.empty_like(pts)
        out[:, 0] = -grad[:, 1] / (pil * r)
        out[:, 1] = grad[:, 0] / (pil * r)
        return out.ravel()

    return rhs


def _lf_rhs(r0: float, settings: IntegratorSettings):
    c = settings.interaction_coefficient
    conv = settings.perp_convention

    def rhs(s, y):
        b = y.reshape(-1, 2)
        diff = b[:, None, :] - b[None, :, :]
        d2 = np.sum(diff**2, axis=-1)
        np.fill_diagonal(d2, 1.0)
        kernel = _perp(diff, conv) / d2[:, :, None]
        idx = np.arange(b.shape[0])
        kernel[idx, idx] = 0.0
        out = c * kernel.sum(axis=1)
        out[:, 1] -= b[:, 0] / r0**2
        return out.ravel()

    return rhs


def _min_pair_dist(pts):
    if pts.shape[0] < 2:
        return np.inf
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    return d.min()


def _implicit_midpoint(rhs, y0, s_span, step, events):
    """Fixed-step implicit midpoint with Picard iteration per step."""
    s0, s1 = s_span
    n_steps = max(1, int(np.ceil(abs(s1 - s0) / step)))
    h = (s1 - s0) / n_steps
    times = [s0]
    ys = [y0.copy()]
    y = y0.copy()
    s = s0
    status = "completed"
    for _ in range(n_steps):
        ynew = y + h * rhs(s, y)
        for _ in range(100):
            mid = 0.5 * (y + ynew)
            ynext = y + h * rhs(s + 0.5 * h, mid)
            delta = np.max(np.abs(ynext - ynew))
            ynew = ynext
            if delta <= 1e-14 * (1.0 + np.max(np.abs(ynew))):
                break
        else:
            raise IntegrationError("implicit midpoint iteration stalled")
        y = ynew
        s += h
        times.append(s)
        ys.append(y.copy())
        stop = None
        for ev, label in events:
            if ev(s, y) <= 0.0:
                stop = label
                break
        if stop:
            status = stop
            break
    return np.array(times), np.array(ys), status


def _run(rhs, y0, s_end, settings, events):
    """Dispatch to the selected scheme; events are (func, label) pairs."""
    if settings.scheme == "implicit_midpoint":
        return _implicit_midpoint(
            rhs, y0, (0.0, s_end), settings.max_step, events
        )
    ev_funcs = []
    for func, _label in events:
        f = func
        f.terminal = True
        ev_funcs.append(f)
    sol = solve_ivp(
        rhs,
        (0.0, s_end),
        y0,
        method="RK45",
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
        max_step=settings.max_step,
        events=ev_funcs,
        dense_output=False,
    )
    if sol.status == -1:
        raise IntegrationError(
            f"integration failed: {sol.message}",
        )
    status = "completed"
    if sol.status == 1:
        for (_, label), hits in zip(events, sol.t_events):
            if hits.size:
                status = label
        # append the event state itself
        if sol.y_events:
            for ye, te in zip(sol.y_events, sol.t_events):
                if len(te) and te[0] > sol.t[-1]:
                    sol.t = np.append(sol.t, te[0])
                    sol.y = np.column_stack([sol.y, ye[0]])
    return sol.t, sol.y.T, status


def integrate_lf_eps(
    init: RingConfig,
    params: HamiltonianParams,
    s_end: float,
    settings: IntegratorSettings = IntegratorSettings(),
) -> Trajectory:
    """Integrate the ring system over rescaled time [0, s_end].

    Stops early (with status 'near_collision' or 'small_radius') when the
    minimum pairwise distance falls below 1e-3 rho_a of the initial
    configuration or any radius falls below 1e-3 of the initial minimum.
    """
    y0 = init.as_array().ravel()
    dist_floor = 1e-3 * init.rho_a
    r_floor = 1e-3 * init.as_array()[:, 0].min()

    def ev_dist(s, y):
        return _min_pair_dist(y.reshape(-1, 2)) - dist_floor

    def ev_radius(s, y):
        return y.reshape(-1, 2)[:, 0].min() - r_floor

    events = [(ev_dist, "near_collision"), (ev_radius, "small_radius")]
    rhs = _lf_eps_rhs(params)
    times, ys, status = _run(rhs, y0, s_end, settings, events)

    states = []
    inv = np.empty((len(times), 2))
    for k, y in enumerate(ys):
        pts = y.reshape(-1, 2)
        cfg = RingConfig(
            [RingPoint(pr, pz) for (pr, pz) in pts], params.epsilon
        )
        states.append(cfg)
        h, _ = h_and_grad_arrays(
            pts[:, 0], pts[:, 1], params.epsilon, params.gamma
        )
        inv[k] = (h, np.pi * np.sum(pts[:, 0] ** 2))
    return Trajectory(times, tuple(states), inv, kind="rings", status=status)


def integrate_lf(
    init: ReducedConfig,
    s_end: float,
    settings: IntegratorSettings = IntegratorSettings(),
) -> Trajectory:
    """Integrate the planar limit system for the rescaled positions b_i."""
    arr = init.as_array()
    y0 = arr.ravel()
    if arr.shape[0] > 1:
        dist_floor = 1e-3 * _min_pair_dist(arr)
    else:
        dist_floor = 0.0

    def ev_dist(s, y):
        return _min_pair_dist(y.reshape(-1, 2)) - dist_floor

    events = [(ev_dist, "near_collision")] if arr.shape[0] > 1 else []
    rhs = _lf_rhs(init.r0, settings)
    times, ys, status = _run(rhs, y0, s_end, settings, events)

    states = []
    inv = np.empty((len(times), 2))
    for k, y in enumerate(ys):
        cfg = ReducedConfig(y.reshape(-1, 2), init.r0, init.z0)
        states.append(cfg)
        inv[k] = reduced_invariants(cfg)
    return Trajectory(times, tuple(states), inv, kind="reduced", status=status)


def lift(
    b_traj: Trajectory,
    params: HamiltonianParams,
    r0: float,
    z0: float = 0.0,
) -> Trajectory:
    """Map a reduced trajectory to ring space.

    a_i(s) = (r0 + r(b_i)/sqrt(L), z0 + s/r0 + z(b_i)/sqrt(L)), L = |log eps|.
    """
    if b_traj.kind != "reduced":
        raise ValueError("lift expects a reduced trajectory")
    sq = np.sqrt(params.log_eps)
    states = []
    inv = np.empty((len(b_traj.times), 2))
    for k, (s, st) in enumerate(zip(b_traj.times, b_traj.states)):
        b = st.as_array()
        r = r0 + b[:, 0] / sq
        z = z0 + s / r0 + b[:, 1] / sq
        if np.any(r <= 0.0):
            raise ValueError(
                "lifted radius is non-positive; epsilon too large for b"
            )
        states.append(
            RingConfig([RingPoint(pr, pz) for pr, pz in zip(r, z)],
                       params.epsilon)
        )
        h, _ = h_and_grad_arrays(r, z, params.epsilon, params.gamma)
        inv[k] = (h, np.pi * np.sum(r**2))
    return Trajectory(
        b_traj.times.copy(), tuple(states), inv, kind="rings",
        status=b_traj.status,
    )


def rescale_to_plane(
    traj: Trajectory, params: HamiltonianParams, r0: float, z0: float = 0.0
) -> Trajectory:
    """Inverse of `lift`: b_i(s) = sqrt(L) (a_i(s) - (r0, z0 + s/r0))."""
    if traj.kind != "rings":
        raise ValueError("rescale_to_plane expects a ring trajectory")
    sq = np.sqrt(params.log_eps)
    states = []
    inv = np.empty((len(traj.times), 2))
    for k, (s, st) in enumerate(zip(traj.times, traj.states)):
        a = st.as_array()
        b = np.column_stack(
            [sq * (a[:, 0] - r0), sq * (a[:, 1] - z0 - s / r0)]
        )
        cfg = ReducedConfig(b, r0, z0)
        states.append(cfg)
        inv[k] = reduced_invariants(cfg)
    return Trajectory(
        traj.times.copy(), tuple(states), inv, kind="reduced",
        status=traj.status,
    )


def trajectory_distance(
    ta: Trajectory, tb: Trajectory, remove_joint_z: bool = False
) -> float:
    """sup over common times of max_i |p_i^A(s) - p_i^B(s)|.

    States are linearly interpolated onto the union of sample times inside
    the overlapping range; point identity follows the stored ordering.
    With remove_joint_z the mean z of each snapshot is subtracted first,
    comparing trajectories modulo the joint translation symmetry.
    """
    na, nb = ta.n_points, tb.n_points
    if na != nb:
        raise ValueError("trajectories have different point counts")
    lo = max(ta.times.min(), tb.times.min())
    hi = min(ta.times.max(), tb.times.max())
    if hi < lo:
        raise ValueError("trajectories do not overlap in time")
    grid = np.union1d(ta.times, tb.times)
    grid = grid[(grid >= lo) & (grid <= hi)]
    pa = ta.positions()
    pb = tb.positions()
    if remove_joint_z:
        pa = pa.copy()
        pb = pb.copy()
        pa[:, :, 1] -= pa[:, :, 1].mean(axis=1, keepdims=True)
        pb[:, :, 1] -= pb[:, :, 1].mean(axis=1, keepdims=True)
    worst = 0.0
    for i in range(na):
        for c in range(2):
            fa = np.interp(grid, ta.times, pa[:, i, c])
            fb = np.interp(grid, tb.times, pb[:, i, c])
            # accumulate squared gap per component, point by point
            if c == 0:
                gap2 = (fa - fb) ** 2
            else:
                gap2 += (fa - fb) ** 2
        worst = max(worst, float(np.sqrt(gap2.max())))
    return worst


def write_trajectory_csv(traj: Trajectory, path):
    """One row per (time, point); see the trajectory CSV schema."""
    if traj.kind == "rings":
        header = "s,i,r,z,H,P"
    else:
        header = "s,i,br,bz,W,Q"
    pos = traj.positions()
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for k, s in enumerate(traj.times):
            inv0, inv1 = traj.invariants_series[k]
            for i in range(pos.shape[1]):
                fh.write(
                    "%.17g,%d,%.17g,%.17g,%.17g,%.17g\n"
                    % (s, i, pos[k, i, 0], pos[k, i, 1], inv0, inv1)
                )


def read_trajectory_csv(path):
    """(times, positions (nt, n, 2), invariants (nt, 2), kind) from a CSV."""
    with open(path) as fh:
        header = fh.readline().strip()
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    kind = "rings" if header.split(",")[2] == "r" else "reduced"
    times = np.unique(data[:, 0])
    n = int(data[:, 1].max()) + 1
    nt = len(times)
    pos = data[:, 2:4].reshape(nt, n, 2)
    inv = data[::n, 4:6]
    return times, pos, inv, kind
