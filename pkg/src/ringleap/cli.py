"""Configuration-driven command line entry point.

Each subcommand runs one scenario from a TOML configuration file (plus a
few flag overrides), writes its CSV/snapshot artifacts into the output
directory together with a ``meta.json`` (resolved configuration, content
hash of the inputs, wall time), and exits 0 on success, 2 on configuration
errors (naming the offending key), 3 on numerical failures (partial
artifacts are kept).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import numpy as np

from . import __version__
from .dynamics import (
    IntegrationError,
    IntegratorSettings,
    integrate_lf,
    integrate_lf_eps,
    lift,
    rescale_to_plane,
    trajectory_distance,
    write_trajectory_csv,
)
from .field import Grid, build_reference_field, solve_profile, weighted_energy
from .gp import GpSettings, gp_simulate
from .hamiltonian import HamiltonianParams, ReducedConfig, hamiltonian
from .portrait import (
    LEAPFROGGING,
    ReducedPair,
    classify,
    find_period,
    h_on_level,
    reconstruct_pair,
)
from .potential import RingConfig, RingPoint, energy_outside_cores

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

FMT = "%.17g"


class ConfigError(Exception):
    """Invalid or missing configuration; the message names the key."""


# ---------------------------------------------------------------------------
# Configuration plumbing

def _load_config(path):
    if path is None:
        return {}, b""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return tomllib.loads(raw.decode()), raw
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc


def _need(cfg, key, caster=None):
    if key not in cfg:
        raise ConfigError(f"missing required key '{key}'")
    value = cfg[key]
    if caster is not None:
        try:
            return caster(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key '{key}': {exc}") from exc
    return value


def _points(cfg, key):
    pts = _need(cfg, key)
    try:
        arr = [(float(p[0]), float(p[1])) for p in pts]
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(
            f"key '{key}' must be a list of [x, y] pairs"
        ) from exc
    if not arr:
        raise ConfigError(f"key '{key}' must contain at least one point")
    return arr


def _settings(cfg):
    kwargs = {}
    for key in ("rel_tol", "abs_tol", "max_step"):
        if key in cfg:
            kwargs[key] = float(cfg[key])
    for key in ("scheme", "perp_convention"):
        if key in cfg:
            kwargs[key] = cfg[key]
    if "interaction_coefficient" in cfg:
        kwargs["interaction_coefficient"] = float(cfg["interaction_coefficient"])
    try:
        return IntegratorSettings(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _params(cfg):
    eps = _need(cfg, "epsilon", float)
    if not 0.0 < eps < 1.0:
        raise ConfigError("key 'epsilon' must lie in (0, 1)")
    return HamiltonianParams(eps, gamma=cfg.get("gamma"))


def _write_meta(out_dir, scenario, resolved, raw_config, t0, extra=None):
    digest = hashlib.sha256()
    digest.update(json.dumps(resolved, sort_keys=True, default=str).encode())
    digest.update(raw_config)
    meta = {
        "scenario": scenario,
        "config": resolved,
        "content_hash": digest.hexdigest(),
        "wall_time_s": time.time() - t0,
        "version": __version__,
    }
    if extra:
        meta.update(extra)
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, default=str)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    str(v) if isinstance(v, (str, int)) else FMT % v
                    for v in row
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# Scenarios

def _run_profile(cfg, out_dir):
    tol = float(cfg.get("tol", 1e-8))
    prof = solve_profile(tol)
    _write_csv(
        os.path.join(out_dir, "profile.csv"),
        "rho,f",
        zip(prof.rho_table, prof.f_table),
    )
    return {"slope0": prof.slope0}


def _run_ode_lf_eps(cfg, out_dir):
    params = _params(cfg)
    pts = _points(cfg, "points")
    init = RingConfig([RingPoint(r, z) for (r, z) in pts], params.epsilon)
    s_end = _need(cfg, "s_end", float)
    traj = integrate_lf_eps(init, params, s_end, _settings(cfg))
    write_trajectory_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    return {"status": traj.status, "n_samples": len(traj.times)}


def _run_ode_lf(cfg, out_dir):
    pts = _points(cfg, "points")
    r0 = _need(cfg, "r0", float)
    z0 = float(cfg.get("z0", 0.0))
    init = ReducedConfig(np.asarray(pts, dtype=float), r0, z0)
    s_end = _need(cfg, "s_end", float)
    traj = integrate_lf(init, s_end, _settings(cfg))
    write_trajectory_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    return {"status": traj.status, "n_samples": len(traj.times)}


def _run_lift_compare(cfg, out_dir):
    pts = _points(cfg, "points")
    r0 = _need(cfg, "r0", float)
    z0 = float(cfg.get("z0", 0.0))
    s_end = _need(cfg, "s_end", float)
    eps_list = [float(e) for e in _need(cfg, "eps_list")]
    settings = _settings(cfg)
    b_init = ReducedConfig(np.asarray(pts, dtype=float), r0, z0)
    b_traj = integrate_lf(b_init, s_end, settings)
    rows = []
    for eps in eps_list:
        params = HamiltonianParams(eps, gamma=cfg.get("gamma"))
        lifted = lift(b_traj, params, r0, z0)
        ring_init = lifted.states[0]
        ring_traj = integrate_lf_eps(ring_init, params, s_end, settings)
        back = rescale_to_plane(ring_traj, params, r0, z0)
        dist = trajectory_distance(back, b_traj, remove_joint_z=True)
        rows.append((eps, dist, np.sqrt(params.log_eps) * dist))
    _write_csv(
        os.path.join(out_dir, "distances.csv"),
        "eps,distance,scaled_distance",
        rows,
    )
    return {"eps_list": eps_list}


def _portrait_cell(args):
    (idx, eta, xi, p_total, eps, gamma, budget, rel_tol) = args
    params = HamiltonianParams(eps, gamma=gamma)
    settings = IntegratorSettings(rel_tol=rel_tol, abs_tol=rel_tol * 1e-2)
    try:
        pair = ReducedPair(eta=eta, xi=xi, P=p_total, epsilon=eps)
        a1, a2 = reconstruct_pair(pair)
        init = RingConfig([a1, a2], eps)
        label = classify(init, params, budget, settings)
    except (ValueError, ArithmeticError, IntegrationError):
        # degenerate cells (coincident or near-coincident rings) and
        # integrations that leave the admissible domain carry no verdict
        return idx, "undetermined", np.nan
    period = np.nan
    if label == LEAPFROGGING:
        found = find_period(init, params, budget, settings)
        if found is not None:
            period = found
    return idx, label, period


def _run_portrait(cfg, out_dir):
    params = _params(cfg)
    p_total = _need(cfg, "P", float)
    n_grid = int(cfg.get("grid", 20))
    n_levels = int(cfg.get("levels_grid", 200))
    eta_max = float(cfg.get("eta_max", 0.45)) * p_total
    xi_max = float(cfg.get("xi_max", 2.0))
    eta_min = float(cfg.get("eta_min", 0.0)) * p_total
    xi_min = float(cfg.get("xi_min", -2.0))
    budget = float(cfg.get("budget", 400.0))
    rel_tol = float(cfg.get("rel_tol", 1e-9))
    workers = int(cfg.get("workers", os.cpu_count() or 1))

    # level curves of H on a fine grid
    etas = np.linspace(-0.99 * p_total / 2, 0.99 * p_total / 2, n_levels)
    xis = np.linspace(xi_min, xi_max, n_levels)
    rows = []
    for eta in etas:
        for xi in xis:
            try:
                pair = ReducedPair(
                    eta=eta, xi=xi, P=p_total, epsilon=params.epsilon
                )
                level = h_on_level(pair, params)
            except ValueError:
                level = np.nan
            rows.append((eta, xi, level))
    _write_csv(os.path.join(out_dir, "levels.csv"), "eta,xi,H", rows)

    # classification grid (deterministic ordering via index)
    eta0s = np.linspace(eta_min, eta_max, n_grid)
    xi0s = np.linspace(xi_min, xi_max, n_grid)
    tasks = []
    idx = 0
    for eta0 in eta0s:
        for xi0 in xi0s:
            tasks.append(
                (idx, eta0, xi0, p_total, params.epsilon, params.gamma,
                 budget, rel_tol)
            )
            idx += 1
    results = [None] * len(tasks)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, label, period in pool.map(_portrait_cell, tasks):
                results[i] = (label, period)
    else:
        for task in tasks:
            i, label, period = _portrait_cell(task)
            results[i] = (label, period)
    rows = []
    idx = 0
    for eta0 in eta0s:
        for xi0 in xi0s:
            label, period = results[idx]
            rows.append((eta0, xi0, label, period))
            idx += 1
    _write_csv(
        os.path.join(out_dir, "regions.csv"), "eta0,xi0,label,period", rows
    )
    labels = sorted({r[2] for r in rows})
    return {"labels_found": labels, "cells": len(rows)}


def _run_gp(cfg, out_dir):
    params = _params(cfg)
    eps = params.epsilon
    gcfg = _need(cfg, "grid")
    try:
        grid = Grid(
            0.0,
            float(gcfg["r_max"]),
            float(gcfg["z_min"]),
            float(gcfg["z_max"]),
            int(gcfg["nr"]),
            int(gcfg["nz"]),
        )
    except KeyError as exc:
        raise ConfigError(f"key 'grid.{exc.args[0]}' is missing") from exc
    except ValueError as exc:
        raise ConfigError(f"key 'grid': {exc}") from exc
    pts = _points(cfg, "points")
    s_end = _need(cfg, "s_end", float)
    dt = float(cfg.get("dt", grid.h**2))
    settings = GpSettings(
        dt=dt,
        scheme=cfg.get("scheme", "strang_split"),
        s_sample=float(cfg.get("s_sample", 0.05)),
    )
    rings = RingConfig([RingPoint(r, z) for (r, z) in pts], eps)
    profile = solve_profile(float(cfg.get("profile_tol", 1e-8)))
    init = build_reference_field(grid, rings, profile)

    snapshot_times = [float(s) for s in cfg.get("snapshot_times", [])]

    def writer(field, s):
        from .field import write_snapshot

        write_snapshot(field, os.path.join(out_dir, f"snap_s{s:g}.rlf"))

    masses = []
    final, diag = gp_simulate(
        init,
        s_end,
        settings,
        n_cores=int(cfg.get("n_cores", len(pts))),
        window=cfg.get("window"),
        snapshot_times=snapshot_times,
        snapshot_writer=writer,
        mass_monitor=lambda m: masses.append(m),
    )
    n = diag.cores.shape[1]
    header = "s,E,P_eps,metric," + ",".join(
        f"a{i + 1}r,a{i + 1}z" for i in range(n)
    )
    rows = []
    for k, s in enumerate(diag.s_values):
        row = [s, diag.energy[k], diag.momentum[k], diag.metric[k]]
        for i in range(n):
            row.extend(diag.cores[k, i])
        rows.append(row)
    _write_csv(os.path.join(out_dir, "diagnostics.csv"), header, rows)
    masses = np.asarray(masses)
    mass_step = (
        float(np.max(np.abs(np.diff(masses))) / masses[0])
        if masses.size > 1
        else 0.0
    )
    return {
        "mass_drift_per_step": mass_step,
        "energy_drift": float(
            np.max(np.abs(diag.energy - diag.energy[0]))
            / abs(diag.energy[0])
        ),
        "momentum_drift": float(
            np.max(np.abs(diag.momentum - diag.momentum[0]))
            / abs(diag.momentum[0])
        ),
    }


def _run_lemma_a1(cfg, out_dir):
    pts = _points(cfg, "points")
    eps = float(cfg.get("epsilon", 1e-6))
    rho_list = [float(r) for r in _need(cfg, "rho_list")]
    rings = RingConfig([RingPoint(r, z) for (r, z) in pts], eps)
    rows = []
    for rho in rho_list:
        res = energy_outside_cores(rings, rho)
        gap = abs(res.numeric - res.closed_form) / abs(res.closed_form)
        rows.append(
            (rho, res.numeric, res.closed_form, gap,
             res.truncation_radius, res.tail_bound)
        )
    _write_csv(
        os.path.join(out_dir, "results.csv"),
        "rho,numeric,closed_form,rel_gap,truncation_radius,tail_bound",
        rows,
    )
    return {"rho_list": rho_list}


def _run_energy_check(cfg, out_dir):
    pts = _points(cfg, "points")
    eps_list = [float(e) for e in _need(cfg, "eps_list")]
    eps_over_h = float(cfg.get("eps_over_h", 5.0))
    r_max = float(cfg.get("r_max", 2.5))
    z_half = float(cfg.get("z_half", 1.25))
    profile = solve_profile(float(cfg.get("profile_tol", 1e-8)))
    rows = []
    for eps in eps_list:
        h_target = eps / eps_over_h
        nr = max(16, int(np.ceil(r_max / h_target)))
        h = r_max / nr
        nz = max(16, int(round(2 * z_half / h)))
        zh = nz * h / 2.0
        grid = Grid(0.0, r_max, -zh, zh, nr, nz)
        rings = RingConfig([RingPoint(r, z) for (r, z) in pts], eps)
        field = build_reference_field(grid, rings, profile)
        e_w = weighted_energy(field)
        params = HamiltonianParams(eps, gamma=cfg.get("gamma"))
        h_eps = hamiltonian(rings, params)
        rows.append((eps, e_w, h_eps, abs(e_w - h_eps) / abs(h_eps)))
    _write_csv(
        os.path.join(out_dir, "energy.csv"),
        "eps,e_w,h_eps,rel_gap",
        rows,
    )
    return {"eps_list": eps_list}


_SCENARIOS = {
    "profile": _run_profile,
    "ode-lf-eps": _run_ode_lf_eps,
    "ode-lf": _run_ode_lf,
    "lift-compare": _run_lift_compare,
    "portrait": _run_portrait,
    "gp-run": _run_gp,
    "lemma-a1": _run_lemma_a1,
    "energy-check": _run_energy_check,
}

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ringleap",
        description="Vortex-ring leapfrogging laboratory",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in _SCENARIOS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="TOML scenario config")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--eps", type=float, default=None)
        sp.add_argument("--P", type=float, default=None)
        sp.add_argument("--grid", type=int, default=None)
        sp.add_argument("--s-end", dest="s_end", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    scenario = args.scenario
    try:
        cfg, raw = _load_config(args.config)
        if args.eps is not None:
            cfg["epsilon"] = args.eps
        if args.P is not None:
            cfg["P"] = args.P
        if args.grid is not None:
            cfg["grid"] = args.grid
        if args.s_end is not None:
            cfg["s_end"] = args.s_end
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        t0 = time.time()
        extra = _SCENARIOS[scenario](cfg, out_dir)
    except ConfigError as exc:
        print(f"ringleap {scenario}: configuration error: {exc}",
              file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, RuntimeError, ValueError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"ringleap {scenario}: numerical failure: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    _write_meta(out_dir, scenario, cfg, raw, t0, extra)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
