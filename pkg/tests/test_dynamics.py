"""Ring and planar ODE systems: conservation, reversal, lifts, CSV I/O."""

import numpy as np
import pytest

from ringleap.dynamics import (
    IntegratorSettings,
    integrate_lf,
    integrate_lf_eps,
    lift,
    read_trajectory_csv,
    rescale_to_plane,
    trajectory_distance,
    write_trajectory_csv,
)
from ringleap.hamiltonian import HamiltonianParams, ReducedConfig
from ringleap.potential import RingConfig, RingPoint

TIGHT = IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12)

LEAPFROG = RingConfig([RingPoint(1.0, 0.15), RingPoint(1.0, -0.15)], 1e-6)


def test_invariants_conserved_two_rings():
    params = HamiltonianParams(1e-6)
    traj = integrate_lf_eps(LEAPFROG, params, 5.0, TIGHT)
    inv = traj.invariants_series
    assert np.max(np.abs(inv[:, 0] / inv[0, 0] - 1.0)) < 1e-8
    assert np.max(np.abs(inv[:, 1] / inv[0, 1] - 1.0)) < 1e-8


def test_time_reversal_recovers_initial_state():
    params = HamiltonianParams(1e-6)
    fwd = integrate_lf_eps(LEAPFROG, params, 2.0, TIGHT)
    back = integrate_lf_eps(fwd.final_state(), params, -2.0, TIGHT)
    assert np.max(
        np.abs(back.final_state().as_array() - LEAPFROG.as_array())
    ) < 1e-7


def test_single_ring_constant_radius_constant_speed():
    params = HamiltonianParams(1e-6)
    init = RingConfig([RingPoint(1.0, 0.0)], params.epsilon)
    traj = integrate_lf_eps(init, params, 3.0, TIGHT)
    pos = traj.positions()[:, 0]
    assert np.max(np.abs(pos[:, 0] - 1.0)) < 1e-10
    # z grows linearly: compare increments over equal spans
    z = np.interp([1.0, 2.0, 3.0], traj.times, pos[:, 1])
    assert z[1] - z[0] == pytest.approx(z[2] - z[1], rel=1e-8)
    assert z[1] > z[0]


def test_implicit_midpoint_agrees_and_conserves():
    params = HamiltonianParams(1e-6)
    mid = IntegratorSettings(
        rel_tol=1e-10, abs_tol=1e-12, scheme="implicit_midpoint",
        max_step=2e-3,
    )
    t_mid = integrate_lf_eps(LEAPFROG, params, 1.0, mid)
    t_ref = integrate_lf_eps(LEAPFROG, params, 1.0, TIGHT)
    d = np.max(
        np.abs(t_mid.final_state().as_array() - t_ref.final_state().as_array())
    )
    assert d < 1e-5
    inv = t_mid.invariants_series
    assert np.max(np.abs(inv[:, 0] / inv[0, 0] - 1.0)) < 1e-6


def test_planar_invariants_and_antipodal_symmetry():
    init = ReducedConfig([[0.0, 0.5], [0.0, -0.5]], 1.0)
    traj = integrate_lf(init, 5.0, IntegratorSettings(rel_tol=1e-11,
                                                      abs_tol=1e-13))
    inv = traj.invariants_series
    # W(0) = 0 for this configuration: use absolute drift
    assert np.max(np.abs(inv[:, 0] - inv[0, 0])) < 1e-8
    assert np.max(np.abs(inv[:, 1] - inv[0, 1])) < 1e-10
    # the planar vector field is odd, so b2 = -b1 persists exactly
    pos = traj.positions()
    assert np.max(np.abs(pos[:, 0] + pos[:, 1])) < 1e-9


def test_lift_rescale_roundtrip():
    init = ReducedConfig([[0.0, 0.5], [0.0, -0.5]], 1.0)
    traj = integrate_lf(init, 1.0, TIGHT)
    params = HamiltonianParams(1e-6)
    lifted = lift(traj, params, 1.0)
    back = rescale_to_plane(lifted, params, 1.0)
    assert trajectory_distance(back, traj) < 1e-12


def test_calibrated_convention_converges(rng):
    # the shipped perp convention must make the rescaled ring system
    # approach the planar limit as eps decreases
    init = ReducedConfig([[0.0, 0.5], [0.0, -0.5]], 1.0)
    b_traj = integrate_lf(init, 5.0, IntegratorSettings())
    dists = []
    for eps in (1e-4, 1e-6):
        params = HamiltonianParams(eps)
        lifted = lift(b_traj, params, 1.0)
        ring = integrate_lf_eps(
            lifted.states[0], params, 5.0, IntegratorSettings()
        )
        back = rescale_to_plane(ring, params, 1.0)
        dists.append(
            np.sqrt(params.log_eps)
            * trajectory_distance(back, b_traj, remove_joint_z=True)
        )
    assert dists[1] < dists[0]


def test_trajectory_csv_roundtrip(tmp_path):
    params = HamiltonianParams(1e-6)
    traj = integrate_lf_eps(LEAPFROG, params, 1.0, TIGHT)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path)
    header = path.read_text().splitlines()[0]
    assert header == "s,i,r,z,H,P"
    times, pos, inv, kind = read_trajectory_csv(path)
    assert kind == "rings"
    assert np.array_equal(times, traj.times)
    assert np.array_equal(pos, traj.positions())
    assert np.array_equal(inv, traj.invariants_series)


def test_close_pair_integrates_cleanly():
    # a tight pair spins fast; the run must either complete or stop with a
    # documented status, never blow up
    params = HamiltonianParams(1e-2)
    close = RingConfig(
        [RingPoint(1.0, 0.02), RingPoint(1.0, -0.02)], params.epsilon
    )
    traj = integrate_lf_eps(close, params, 1.0, IntegratorSettings())
    assert traj.status in ("completed", "near_collision", "small_radius")
    assert np.all(np.isfinite(traj.positions()))


def test_settings_validation():
    with pytest.raises(ValueError):
        IntegratorSettings(rel_tol=-1.0)
    with pytest.raises(ValueError):
        IntegratorSettings(scheme="leapfrog")
    with pytest.raises(ValueError):
        IntegratorSettings(scheme="implicit_midpoint")
    with pytest.raises(ValueError):
        IntegratorSettings(perp_convention="sideways")
