"""Command line interface: exit codes, artifacts, determinism.

Each subcommand must exit 0 and leave its CSV artifacts plus a
``meta.json`` on success, exit 2 on configuration errors while naming the
offending key, and produce byte-identical artifacts when re-run with the
same configuration.
"""

import json
import os

import pytest

from ringleap.cli import main


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)
    return str(path)


TWO_RING_TOML = """
epsilon = 1e-6
points = [[1.0, 0.15], [1.0, -0.15]]
s_end = 2.0
rel_tol = 1e-10
abs_tol = 1e-12
"""


def test_ode_lf_eps_exit_zero_and_trajectory_header(tmp_path):
    cfg = _write(tmp_path / "two_ring.toml", TWO_RING_TOML)
    out = tmp_path / "out"
    rc = main(["ode-lf-eps", "--config", cfg, "--out", str(out)])
    assert rc == 0
    with open(out / "trajectory.csv") as fh:
        header = fh.readline().strip()
        first = fh.readline().strip()
    assert header == "s,i,r,z,H,P"
    assert len(first.split(",")) == 6


def test_meta_json_records_scenario_config_hash_and_timing(tmp_path):
    cfg = _write(tmp_path / "two_ring.toml", TWO_RING_TOML)
    out = tmp_path / "out"
    assert main(["ode-lf-eps", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "meta.json") as fh:
        meta = json.load(fh)
    assert meta["scenario"] == "ode-lf-eps"
    assert meta["config"]["epsilon"] == 1e-6
    assert len(meta["content_hash"]) == 64
    assert meta["wall_time_s"] >= 0.0
    assert meta["status"] == "completed"


def test_missing_required_key_exits_2_and_names_key(tmp_path, capsys):
    cfg = _write(
        tmp_path / "bad.toml",
        'epsilon = 1e-6\npoints = [[1.0, 0.15], [1.0, -0.15]]\n',
    )
    rc = main(["ode-lf-eps", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "s_end" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path, capsys):
    rc = main(
        ["ode-lf-eps", "--config", str(tmp_path / "nope.toml"),
         "--out", str(tmp_path / "o")]
    )
    assert rc == 2
    assert "nope.toml" in capsys.readouterr().err


def test_malformed_toml_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path / "broken.toml", "epsilon = [[[\n")
    rc = main(["ode-lf-eps", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "parse error" in capsys.readouterr().err


def test_invalid_epsilon_exits_2(tmp_path, capsys):
    cfg = _write(
        tmp_path / "eps.toml",
        'epsilon = 2.0\npoints = [[1.0, 0.1]]\ns_end = 1.0\n',
    )
    rc = main(["ode-lf-eps", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "epsilon" in capsys.readouterr().err


def test_flag_overrides_take_precedence_over_config(tmp_path):
    cfg = _write(tmp_path / "two_ring.toml", TWO_RING_TOML)
    out = tmp_path / "out"
    rc = main(
        ["ode-lf-eps", "--config", cfg, "--out", str(out),
         "--eps", "1e-5", "--s-end", "1.0"]
    )
    assert rc == 0
    with open(out / "meta.json") as fh:
        meta = json.load(fh)
    assert meta["config"]["epsilon"] == 1e-5
    assert meta["config"]["s_end"] == 1.0


def test_rerun_produces_byte_identical_csv(tmp_path):
    cfg = _write(tmp_path / "two_ring.toml", TWO_RING_TOML)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["ode-lf-eps", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["ode-lf-eps", "--config", cfg, "--out", str(out2)]) == 0
    with open(out1 / "trajectory.csv", "rb") as fh:
        first = fh.read()
    with open(out2 / "trajectory.csv", "rb") as fh:
        second = fh.read()
    assert first == second


def test_portrait_writes_levels_and_regions(tmp_path):
    cfg = _write(
        tmp_path / "portrait.toml",
        "\n".join(
            [
                "epsilon = 1e-6",
                "P = 6.283185307179586",
                "grid = 2",
                "levels_grid = 12",
                "eta_min = 0.01",
                "eta_max = 0.05",
                "xi_min = -0.2",
                "xi_max = 0.2",
                "budget = 30.0",
                "workers = 1",
            ]
        )
        + "\n",
    )
    out = tmp_path / "out"
    rc = main(["portrait", "--config", cfg, "--out", str(out)])
    assert rc == 0
    with open(out / "levels.csv") as fh:
        assert fh.readline().strip() == "eta,xi,H"
    with open(out / "regions.csv") as fh:
        assert fh.readline().strip() == "eta0,xi0,label,period"
        rows = [line.strip().split(",") for line in fh]
    assert len(rows) == 4
    # all four cells sit deep inside the bounded region
    assert all(row[2] == "leapfrogging" for row in rows)


def test_lemma_a1_writes_results_with_tail_bounds(tmp_path):
    cfg = _write(
        tmp_path / "single.toml",
        "points = [[1.0, 0.0]]\nrho_list = [0.05]\n",
    )
    out = tmp_path / "out"
    rc = main(["lemma-a1", "--config", cfg, "--out", str(out)])
    assert rc == 0
    with open(out / "results.csv") as fh:
        header = fh.readline().strip()
        row = fh.readline().strip().split(",")
    assert header == (
        "rho,numeric,closed_form,rel_gap,truncation_radius,tail_bound"
    )
    # physics of the gap is covered by the potential-module tests; here we
    # only require a sane value at this cutoff
    assert float(row[3]) < 1e-2


def test_gp_run_rejects_unresolved_core_with_exit_3(tmp_path, capsys):
    cfg = _write(
        tmp_path / "gp.toml",
        "\n".join(
            [
                "epsilon = 0.001",  # far below two grid spacings
                "points = [[1.0, 0.0]]",
                "s_end = 0.01",
                "[grid]",
                "r_max = 2.0",
                "z_min = -1.0",
                "z_max = 1.0",
                "nr = 32",
                "nz = 32",
            ]
        )
        + "\n",
    )
    rc = main(["gp-run", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err


def test_checked_in_configs_parse_against_their_scenarios():
    # every versioned config names only keys its scenario understands
    import tomli as tomllib

    cfg_dir = os.path.join(os.path.dirname(__file__), "..", "configs")
    names = sorted(os.listdir(cfg_dir))
    assert len(names) >= 8
    for name in names:
        with open(os.path.join(cfg_dir, name), "rb") as fh:
            tomllib.load(fh)
