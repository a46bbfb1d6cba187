"""Portrait and trajectory figures from ringleap CSV artifacts.

Rendering is deterministic: the Agg backend, a fixed style, and no
timestamps, so identical inputs give byte-identical PNGs.
"""

from __future__ import annotations

import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import SchemaError, read_levels, read_regions, read_trajectory

EXIT_OK = 0
EXIT_SCHEMA = 2

REGION_STYLE = {
    "leapfrogging": ("#2b6cb0", "leapfrogging"),
    "pass_through": ("#c05621", "pass through"),
    "attract_then_repel": ("#2f855a", "attract then repel"),
    "undetermined": ("#a0aec0", "undetermined"),
}

_RC = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 10,
    "svg.hashsalt": "ringplot",
}


def _grid_from_columns(x, y, v):
    """Reshape flat product-grid columns into (xu, yu, values) arrays."""
    xu = np.unique(x)
    yu = np.unique(y)
    if len(xu) * len(yu) != len(v):
        raise SchemaError(
            f"rows do not form a product grid: {len(xu)}x{len(yu)} "
            f"!= {len(v)}"
        )
    order = np.lexsort((y, x))
    return xu, yu, np.asarray(v)[order].reshape(len(xu), len(yu))


def render_portrait(levels_csv, regions_csv, out_path):
    """Level curves of H over (eta, xi) with classified regions shaded."""
    eta, xi, h_vals = read_levels(levels_csv)
    eta0, xi0, labels, _ = read_regions(regions_csv)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7.0, 5.0))
        eu, xu, hh = _grid_from_columns(eta, xi, h_vals)
        finite = np.isfinite(hh)
        if finite.any():
            q = np.quantile(hh[finite], np.linspace(0.02, 0.98, 25))
            ax.contour(
                eu,
                xu,
                hh.T,
                levels=np.unique(q),
                colors="k",
                linewidths=0.4,
                alpha=0.6,
            )
        if len(labels) == 0:
            print(
                f"warning: {regions_csv} has no region rows; "
                "rendering contours only",
                file=sys.stderr,
            )
        for name, (color, text) in REGION_STYLE.items():
            mask = labels == name
            if not mask.any():
                continue
            ax.scatter(
                eta0[mask],
                xi0[mask],
                s=36,
                c=color,
                marker="s",
                label=text,
                zorder=3,
            )
        ax.set_xlabel(r"$\eta$")
        ax.set_ylabel(r"$\xi$")
        ax.set_title("two-ring phase plane")
        if len(labels):
            ax.legend(loc="upper right", framealpha=0.9)
        fig.savefig(out_path, format="png")
        plt.close(fig)


def render_trajectory(traj_csv, out_path):
    """Per-ring (r, z) traces plus an invariant-drift subplot."""
    kind, s, idx, x, y, inv0, inv1 = read_trajectory(traj_csv)
    inv_names = ("H", "P") if kind == "rings" else ("W", "Q")
    xy_names = ("r", "z") if kind == "rings" else ("b_r", "b_z")
    with plt.rc_context(_RC):
        fig, (ax_tr, ax_inv) = plt.subplots(
            1, 2, figsize=(9.0, 4.0), width_ratios=[3, 2]
        )
        for i in np.unique(idx).astype(int):
            mask = idx == i
            ax_tr.plot(x[mask], y[mask], lw=1.0, label=f"ring {i + 1}")
        ax_tr.set_xlabel(xy_names[0])
        ax_tr.set_ylabel(xy_names[1])
        ax_tr.set_title("traces")
        ax_tr.legend()
        first = idx == idx[0]
        for vals, name in ((inv0[first], inv_names[0]),
                           (inv1[first], inv_names[1])):
            ax_inv.plot(s[first], vals / vals[0] - 1.0, lw=1.0, label=name)
        ax_inv.set_xlabel("s")
        ax_inv.set_ylabel("relative drift")
        ax_inv.set_title("invariants")
        ax_inv.legend()
        fig.tight_layout()
        fig.savefig(out_path, format="png")
        plt.close(fig)


def portrait_main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3:
        print(
            "usage: render_portrait <levels.csv> <regions.csv> <out.png>",
            file=sys.stderr,
        )
        return EXIT_SCHEMA
    try:
        render_portrait(*argv)
    except (OSError, SchemaError) as exc:
        print(f"render_portrait: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return EXIT_OK


def trajectory_main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print(
            "usage: render_trajectory <trajectory.csv> <out.png>",
            file=sys.stderr,
        )
        return EXIT_SCHEMA
    try:
        render_trajectory(*argv)
    except (OSError, SchemaError) as exc:
        print(f"render_trajectory: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return EXIT_OK
