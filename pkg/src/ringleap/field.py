"""Discrete complex fields on (r, z) grids and their vortex diagnostics.

Holds the radial vortex profile f_1 (solving f'' + f'/t - f/t^2 + f(1-f^2)
= 0 with f(0) = 0, f -> 1), the construction of reference vortex-ring
fields u*(r, z) = prod_k f((dist to a_k)/eps) e^{i phi} with phase phi
integrated from the analytic singular current, and the diagnostics used by
the PDE experiments: weighted energy, Jacobian density, vortex tracking, a
dual-Lipschitz localization metric, and the cut-off momentum.

Grid convention: nodes r_i = r_min + i h (i = 0..nr-1), z_j = z_min + j h,
h = (r_max - r_min)/nr; the outer walls sit half a cell beyond the last
nodes, matching the mirror (Neumann) boundary treatment of the PDE solver.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import integrate
from scipy.ndimage import maximum_filter

from .potential import RingConfig, RingPoint, current_field

__all__ = [
    "Grid",
    "ComplexField",
    "ScalarField",
    "Profile",
    "LocalizationReport",
    "TrackingError",
    "solve_profile",
    "profile_energy_excess",
    "build_reference_field",
    "weighted_energy",
    "jacobian_field",
    "track_vortices",
    "localization_metric",
    "momentum_eps",
    "write_snapshot",
    "read_snapshot",
]


class TrackingError(RuntimeError):
    """Vortex tracking could not find the requested number of peaks."""


@dataclass(frozen=True)
class Grid:
    """Uniform square-cell grid on [r_min, r_max] x [z_min, z_max]."""

    r_min: float
    r_max: float
    z_min: float
    z_max: float
    nr: int
    nz: int

    def __post_init__(self):
        if self.nr < 16 or self.nz < 16:
            raise ValueError("grid must have at least 16 nodes per side")
        if self.r_min < 0:
            raise ValueError("r_min must be nonnegative")
        hr = (self.r_max - self.r_min) / self.nr
        hz = (self.z_max - self.z_min) / self.nz
        if hr <= 0 or abs(hr - hz) > 1e-12 * hr:
            raise ValueError("cells must be square: (r_max-r_min)/nr == (z_max-z_min)/nz")

    @property
    def h(self) -> float:
        return (self.r_max - self.r_min) / self.nr

    @property
    def r(self):
        return self.r_min + self.h * np.arange(self.nr)

    @property
    def z(self):
        return self.z_min + self.h * np.arange(self.nz)

    def mesh(self):
        return np.meshgrid(self.r, self.z, indexing="ij")


@dataclass(frozen=True)
class ComplexField:
    """Complex nodal values on a grid; epsilon tags GP states."""

    grid: Grid
    values: np.ndarray
    epsilon: float = np.nan

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.nr, self.grid.nz):
            raise ValueError(
                f"values shape {v.shape} does not match grid "
                f"({self.grid.nr}, {self.grid.nz})"
            )
        if not np.all(np.isfinite(v.view(float))):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ScalarField:
    """Real nodal values on a grid (e.g. the Jacobian density)."""

    grid: Grid
    values: np.ndarray


# ---------------------------------------------------------------------------
# Radial vortex profile

# Far-tail coefficients: f = 1 - sum_k A[k] t^{-2k}, from the algebraic
# balance of the profile equation around f = 1.
_TAIL = np.array([0.0, 0.5, 9.0 / 8.0, 161.0 / 16.0, 6118.0 / 32.0 + 189.0 / 128.0])
_T_MATCH = 14.0
_T_END = 40.0
_T0 = 1e-8


def _tail_value(t):
    t = np.asarray(t, dtype=float)
    t2 = t * t
    return 1.0 - (_TAIL[1] + (_TAIL[2] + (_TAIL[3] + _TAIL[4] / t2) / t2) / t2) / t2


def _tail_slope(t):
    t = np.asarray(t, dtype=float)
    t2 = t * t
    return (
        2 * _TAIL[1]
        + (4 * _TAIL[2] + (6 * _TAIL[3] + 8 * _TAIL[4] / t2) / t2) / t2
    ) / (t2 * t)


def _profile_rhs(t, y):
    f, fp = y
    return [fp, -fp / t + f / (t * t) - f * (1.0 - f * f)]


def _shoot(alpha, t_end, dense=False):
    """Integrate from the axis with f ~ alpha t; flags blow-up or turn-down."""
    y0 = [alpha * _T0, alpha]

    def overshoot(t, y):
        return y[0] - 1.5

    def undershoot(t, y):
        return y[1]

    overshoot.terminal = True
    undershoot.terminal = True
    undershoot.direction = -1.0
    sol = integrate.solve_ivp(
        _profile_rhs,
        (_T0, t_end),
        y0,
        method="RK45",
        rtol=1e-12,
        atol=1e-14,
        events=[overshoot, undershoot],
        dense_output=dense,
    )
    return sol


@dataclass(frozen=True)
class Profile:
    """Tabulated radial profile f_1 with f(0)=0, f'(0)=slope0, f -> 1."""

    rho_table: np.ndarray
    f_table: np.ndarray
    slope0: float

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.interp(rho, self.rho_table, self.f_table)
        return np.where(rho >= self.rho_table[-1], _tail_value(np.maximum(rho, 1.0)), out)


_PROFILE_CACHE = {}


def solve_profile(tol: float = 1e-8) -> Profile:
    """Solve the profile equation on [0, 40] by shooting on the axis slope.

    The slope alpha in f ~ alpha t is bisected between undershoot (f' turns
    negative) and overshoot (f exceeds 1.5) events up to t = 14, where the
    solution is matched to the algebraic far tail; the mismatch there must
    not exceed tol.  Beyond the matching point the tail series is used.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if tol in _PROFILE_CACHE:
        return _PROFILE_CACHE[tol]

    lo, hi = 0.4, 0.8
    sol_lo = _shoot(lo, _T_MATCH)
    sol_hi = _shoot(hi, _T_MATCH)
    if sol_lo.t_events[1].size == 0 or sol_hi.t_events[0].size == 0:
        raise RuntimeError("shooting bracket failure for the profile slope")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        sol = _shoot(mid, _T_MATCH)
        if sol.t_events[0].size:  # overshoot: slope too large
            hi = mid
        elif sol.t_events[1].size:  # turned down: slope too small
            lo = mid
        else:  # reached t_match cleanly; compare with tail
            if sol.y[0, -1] > _tail_value(_T_MATCH):
                hi = mid
            else:
                lo = mid
    alpha = 0.5 * (lo + hi)
    sol = _shoot(alpha, _T_MATCH, dense=True)
    if not sol.success or sol.t[-1] < _T_MATCH:
        raise RuntimeError("profile shooting did not reach the matching point")
    mismatch = abs(sol.y[0, -1] - _tail_value(_T_MATCH))
    if mismatch > tol:
        raise RuntimeError(
            f"profile/tail mismatch {mismatch:.3e} exceeds tol {tol:.3e}"
        )

    t_in = np.linspace(_T0, _T_MATCH, 5601)
    f_in = sol.sol(t_in)[0]
    t_out = np.linspace(_T_MATCH, _T_END, 1301)[1:]
    f_out = _tail_value(t_out)
    rho = np.concatenate([[0.0], t_in, t_out])
    f = np.concatenate([[0.0], f_in, f_out])
    prof = Profile(rho, np.clip(f, 0.0, 1.0), alpha)
    _PROFILE_CACHE[tol] = prof
    object.__setattr__(prof, "_dense", sol.sol)
    return prof


def profile_energy_excess(epsilon: float) -> float:
    """Energy of f(rho/eps) e^{i theta} on the unit disk minus pi |log eps|.

    The integral runs over t in [0, min(40, 1/eps)] with the algebraic tail
    integrated analytically beyond the table; converges to the core energy
    constant as eps -> 0.
    """
    prof = solve_profile()
    dense = prof._dense

    def f_fp(t):
        if t <= _T_MATCH:
            y = dense(t)
            return y[0], y[1]
        return float(_tail_value(t)), float(_tail_slope(t))

    def density(t):
        f, fp = f_fp(t)
        return (fp * fp + (f * f) / (t * t) + 0.5 * (1.0 - f * f) ** 2) * t

    t_end = min(_T_END, 1.0 / epsilon)
    val, _ = integrate.quad(
        density, 0.0, t_end, epsrel=1e-12, epsabs=1e-13,
        points=[_T_MATCH] if t_end > _T_MATCH else None, limit=400,
    )
    # analytic continuation of int (density - 1/t) from t_end to 1/eps
    big_r = 1.0 / epsilon
    tail = -0.25 / t_end**2 + 0.25 / t_end**4
    if np.isfinite(big_r) and big_r > t_end:
        tail += 0.25 / big_r**2 - 0.25 / big_r**4
    return float(np.pi * (val - np.log(t_end) + tail))


# ---------------------------------------------------------------------------
# Reference field construction

_GAUSS_X = np.array(
    [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526]
)
_GAUSS_W = np.array(
    [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538]
)


def _edge_integrals(rings, p0r, p0z, p1r, p1z, n_panels):
    """Line integrals of j(u*) along straight edges p0 -> p1, vectorized.

    The planar vortex parts grad theta_k are integrated exactly via swept
    angles (no edge crosses a core by the clearance precondition); the
    smooth remainder uses composite 4-point Gauss with n_panels panels.
    """
    arr = rings.as_array()
    total = np.zeros(np.shape(p0r))
    # exact swept angle per core: angle(p1-c) - angle(p0-c) in (-pi, pi]
    for (ar, az) in arr:
        v0r, v0z = p0r - ar, p0z - az
        v1r, v1z = p1r - ar, p1z - az
        cross = v0r * v1z - v0z * v1r
        dot = v0r * v1r + v0z * v1z
        total += np.arctan2(cross, dot)
    # smooth remainder
    er, ez = p1r - p0r, p1z - p0z
    for panel in range(n_panels):
        a0 = panel / n_panels
        a1 = (panel + 1) / n_panels
        mid = 0.5 * (a0 + a1)
        half = 0.5 * (a1 - a0)
        for gx, gw in zip(_GAUSS_X, _GAUSS_W):
            t = mid + half * gx
            qr = p0r + t * er
            qz = p0z + t * ez
            jr, jz = current_field(rings, qr, qz)
            res_r = jr.copy()
            res_z = jz.copy()
            for (ar, az) in arr:
                d2 = (qr - ar) ** 2 + (qz - az) ** 2
                res_r -= -(qz - az) / d2
                res_z -= (qr - ar) / d2
            total += gw * half * (res_r * er + res_z * ez)
    return total


def build_reference_field(
    grid: Grid, rings: RingConfig, profile: Profile
) -> ComplexField:
    """Reference multi-ring field: product-of-profiles modulus, phase from j.

    The phase is the line integral of the analytic singular current along a
    spanning tree of grid edges (first along the r_min column, then along
    each r-row) from the node (0, 0); the Jacobian of the result winds by
    2 pi around each core.
    """
    h = grid.h
    eps = rings.epsilon
    if eps < 2.0 * h:
        raise ValueError(f"unresolved core: eps = {eps} < 2h = {2 * h}")
    arr = rings.as_array()
    clear = 8.0 * h
    if (
        np.any(arr[:, 0] < grid.r_min + clear)
        or np.any(arr[:, 0] > grid.r_max - clear)
        or np.any(arr[:, 1] < grid.z_min + clear)
        or np.any(arr[:, 1] > grid.z_max - clear)
    ):
        raise ValueError("ring cores must clear the grid boundary by 8h")

    rr, zz = grid.mesh()
    modulus = np.ones_like(rr)
    for (ar, az) in arr:
        dist = np.hypot(rr - ar, zz - az)
        modulus *= profile(dist / eps)

    phase = np.zeros((grid.nr, grid.nz))
    rv, zv = grid.r, grid.z
    # trunk: vertical edges along i = 0 (cores clear this column by 8h)
    trunk = _edge_integrals(
        rings,
        np.full(grid.nz - 1, rv[0]), zv[:-1],
        np.full(grid.nz - 1, rv[0]), zv[1:],
        n_panels=2,
    )
    phase[0, 1:] = np.cumsum(trunk)
    # branches: horizontal edges along each row j; edges passing within
    # half a cell of a core are rerouted through the adjacent row so that
    # a core sitting on (or next to) a grid node cannot corrupt the phase
    # of every node downstream of it in the row
    for j in range(grid.nz):
        row = _edge_integrals(
            rings,
            rv[:-1], np.full(grid.nr - 1, zv[j]),
            rv[1:], np.full(grid.nr - 1, zv[j]),
            n_panels=2,
        )
        for (ar, az) in arr:
            if abs(zv[j] - az) >= 0.45 * h:
                continue
            jd = j - 1 if j > 0 else j + 1
            bad = np.nonzero(np.abs(0.5 * (rv[:-1] + rv[1:]) - ar) < h)[0]
            for i in bad:
                down = _edge_integrals(rings, rv[i], zv[j], rv[i], zv[jd], 2)
                over = _edge_integrals(rings, rv[i], zv[jd], rv[i + 1], zv[jd], 2)
                up = _edge_integrals(rings, rv[i + 1], zv[jd], rv[i + 1], zv[j], 2)
                row[i] = down + over + up
        phase[1:, j] = phase[0, j] + np.cumsum(row)

    return ComplexField(grid, modulus * np.exp(1j * phase), epsilon=eps)


# ---------------------------------------------------------------------------
# Diagnostics

def weighted_energy(field: ComplexField, epsilon: float = None) -> float:
    """Midpoint-rule discretization of int (|grad u|^2/2 + (1-|u|^2)^2/(4 eps^2)) r.

    Gradients and densities are evaluated at cell centers from the four
    corner nodes; the r weight is the center radius, so axis cells carry
    weight h/2 automatically.
    """
    eps = field.epsilon if epsilon is None else epsilon
    if not np.isfinite(eps):
        raise ValueError("epsilon required (field carries none)")
    u = field.values
    h = field.grid.h
    du_r = (u[1:, 1:] + u[1:, :-1] - u[:-1, 1:] - u[:-1, :-1]) / (2 * h)
    du_z = (u[1:, 1:] - u[1:, :-1] + u[:-1, 1:] - u[:-1, :-1]) / (2 * h)
    uc = 0.25 * (u[1:, 1:] + u[1:, :-1] + u[:-1, 1:] + u[:-1, :-1])
    dens = 0.5 * (np.abs(du_r) ** 2 + np.abs(du_z) ** 2)
    dens += (1.0 - np.abs(uc) ** 2) ** 2 / (4.0 * eps**2)
    rc = 0.5 * (field.grid.r[1:] + field.grid.r[:-1])
    return float(np.sum(dens * rc[:, None]) * h * h)


def jacobian_field(field: ComplexField) -> ScalarField:
    """Ju = Im(conj(d_r u) d_z u): centered interior, one-sided boundaries."""
    h = field.grid.h
    du_r = np.gradient(field.values, h, axis=0)
    du_z = np.gradient(field.values, h, axis=1)
    return ScalarField(field.grid, np.imag(np.conj(du_r) * du_z))


def track_vortices(jac: ScalarField, n: int, window: float):
    """The n strongest well-separated peaks of |Ju|, first-moment refined.

    Peaks must exceed 10x the median of |Ju|; selected peaks are separated
    by at least `window`, and each is refined to the centroid of Ju over the
    window-radius disk around it.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = jac.grid
    if window < 4 * grid.h:
        raise ValueError("window must be at least 4h")
    mag = np.abs(jac.values)
    floor = 10.0 * np.median(mag)
    is_peak = (mag == maximum_filter(mag, size=3)) & (mag > floor)
    idx = np.argwhere(is_peak)
    if idx.size == 0:
        raise TrackingError("no Jacobian peaks above 10x the median")
    order = np.argsort(mag[is_peak])[::-1]
    idx = idx[order]
    rr, zz = grid.mesh()
    chosen = []
    for (i, j) in idx:
        p = np.array([rr[i, j], zz[i, j]])
        if all(np.linalg.norm(p - q) >= window for q in chosen):
            chosen.append(p)
        if len(chosen) == n:
            break
    if len(chosen) < n:
        raise TrackingError(
            f"only {len(chosen)} separated peaks found, {n} requested"
        )
    out = []
    for p in chosen:
        mask = (rr - p[0]) ** 2 + (zz - p[1]) ** 2 <= window**2
        w = jac.values * mask
        s = w.sum()
        if s == 0.0:
            raise TrackingError("degenerate window (zero Jacobian mass)")
        out.append(RingPoint(float((w * rr).sum() / s), float((w * zz).sum() / s)))
    return out


@dataclass(frozen=True)
class LocalizationReport:
    """Tracked cores plus the dual-Lipschitz gap between Ju and pi sum delta."""

    tracked_points: tuple
    metric: float
    window: float


def localization_metric(jac: ScalarField, points, dictionary_scales) -> float:
    """max over a dictionary of 1-Lipschitz tents of |<phi, Ju> - pi sum phi(a_i)|.

    Tents phi(x) = max(0, min(sigma - |x - c|, r - r_floor)) live on lattices
    of pitch sigma (plus one tent at each given point) and vanish outside
    Omega_0 = {r >= r_floor}, r_floor = min_i r(a_i)/4.  The maximum over a
    finite dictionary is a lower bound of the dual norm.
    """
    scales = list(dictionary_scales)
    if not scales:
        raise ValueError("dictionary_scales must be non-empty")
    pts = [p if isinstance(p, RingPoint) else RingPoint(*p) for p in points] if points else []
    grid = jac.grid
    r_floor = min(p.r for p in pts) / 4.0 if pts else 0.0
    rr, zz = grid.mesh()
    ju = jac.values
    h2 = grid.h**2
    clip = np.maximum(rr - r_floor, 0.0)
    best = 0.0
    for sigma in scales:
        if sigma <= 0:
            raise ValueError("scales must be positive")
        centers = []
        for cr in np.arange(max(grid.r_min, r_floor), grid.r_max + 0.5 * sigma, sigma):
            for cz in np.arange(grid.z_min, grid.z_max + 0.5 * sigma, sigma):
                centers.append((cr, cz))
        centers.extend((p.r, p.z) for p in pts)
        for (cr, cz) in centers:
            # restrict to the tent support for speed
            i0 = max(0, int((cr - sigma - grid.r_min) / grid.h) - 1)
            i1 = min(grid.nr, int((cr + sigma - grid.r_min) / grid.h) + 2)
            j0 = max(0, int((cz - sigma - grid.z_min) / grid.h) - 1)
            j1 = min(grid.nz, int((cz + sigma - grid.z_min) / grid.h) + 2)
            if i0 >= i1 or j0 >= j1:
                continue
            sub_r = rr[i0:i1, j0:j1]
            sub_z = zz[i0:i1, j0:j1]
            d = np.hypot(sub_r - cr, sub_z - cz)
            phi = np.minimum(np.maximum(sigma - d, 0.0), clip[i0:i1, j0:j1])
            val = np.sum(phi * ju[i0:i1, j0:j1]) * h2
            for p in pts:
                dp = np.hypot(p.r - cr, p.z - cz)
                val -= np.pi * min(max(sigma - dp, 0.0), max(p.r - r_floor, 0.0))
            best = max(best, abs(float(val)))
    return best


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def momentum_eps(field: ComplexField, r_cutoff: float) -> float:
    """Sum Ju r^2 chi h^2 with chi a smooth cutoff, 1 on the r_cutoff box."""
    grid = field.grid
    ju = jacobian_field(field).values
    rr, zz = grid.mesh()
    chi = _smoothstep((2.0 * r_cutoff - rr) / r_cutoff) * _smoothstep(
        (2.0 * r_cutoff - np.abs(zz)) / r_cutoff
    )
    return float(np.sum(ju * rr**2 * chi) * grid.h**2)


# ---------------------------------------------------------------------------
# Snapshot IO

_MAGIC = b"RLF1"
_HEADER_FMT = "<4sqqddddd"  # magic, nr, nz, r_max, z_min, z_max, eps, pad


def write_snapshot(field: ComplexField, path):
    """Binary snapshot: RLF1 header then row-major complex128, little-endian."""
    grid = field.grid
    if grid.r_min != 0.0:
        raise ValueError("snapshot format assumes r_min = 0")
    header = struct.pack(
        _HEADER_FMT,
        _MAGIC,
        grid.nr,
        grid.nz,
        grid.r_max,
        grid.z_min,
        grid.z_max,
        field.epsilon,
        0.0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())


def read_snapshot(path) -> ComplexField:
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize(_HEADER_FMT))
        magic, nr, nz, r_max, z_min, z_max, eps, _pad = struct.unpack(
            _HEADER_FMT, head
        )
        if magic != _MAGIC:
            raise ValueError("not a RLF1 snapshot")
        data = np.frombuffer(fh.read(16 * nr * nz), dtype="<c16").reshape(nr, nz)
    grid = Grid(0.0, r_max, z_min, z_max, nr, nz)
    return ComplexField(grid, data.astype(complex), epsilon=eps)
