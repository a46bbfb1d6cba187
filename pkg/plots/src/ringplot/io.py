"""Schema-checked readers for the ringleap CSV artifacts."""

from __future__ import annotations

import csv

import numpy as np

LEVELS_HEADER = ["eta", "xi", "H"]
REGIONS_HEADER = ["eta0", "xi0", "label", "period"]
TRAJECTORY_HEADERS = {
    "rings": ["s", "i", "r", "z", "H", "P"],
    "reduced": ["s", "i", "br", "bz", "W", "Q"],
}


class SchemaError(ValueError):
    """CSV header or column contents do not match the documented schema."""


def _read_rows(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header "
                              f"{','.join(expected_header)}") from None
        if header != expected_header:
            raise SchemaError(
                f"{path}: header mismatch: got {','.join(header)!r}, "
                f"expected {','.join(expected_header)!r}"
            )
        rows = list(reader)
    for k, row in enumerate(rows):
        if len(row) != len(expected_header):
            raise SchemaError(
                f"{path}: row {k + 2} has {len(row)} columns, expected "
                f"{len(expected_header)}"
            )
    return rows


def _column(path, rows, header, name):
    j = header.index(name)
    out = np.empty(len(rows))
    for k, row in enumerate(rows):
        try:
            out[k] = float(row[j])
        except ValueError:
            raise SchemaError(
                f"{path}: column '{name}', row {k + 2}: "
                f"non-numeric value {row[j]!r}"
            ) from None
    return out


def read_levels(path):
    """(eta, xi, H) columns of a levels.csv file."""
    rows = _read_rows(path, LEVELS_HEADER)
    return tuple(
        _column(path, rows, LEVELS_HEADER, name) for name in LEVELS_HEADER
    )


def read_regions(path):
    """(eta0, xi0, labels, period) of a regions.csv file; labels are str."""
    rows = _read_rows(path, REGIONS_HEADER)
    eta0 = _column(path, rows, REGIONS_HEADER, "eta0")
    xi0 = _column(path, rows, REGIONS_HEADER, "xi0")
    labels = np.array([row[2] for row in rows], dtype=object)
    period = _column(path, rows, REGIONS_HEADER, "period")
    return eta0, xi0, labels, period


def read_trajectory(path):
    """(kind, s, i, x, y, inv0, inv1) of a trajectory CSV.

    kind is 'rings' (columns r,z,H,P) or 'reduced' (columns br,bz,W,Q),
    recognized from the header.
    """
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
    for kind, expected in TRAJECTORY_HEADERS.items():
        if header == expected:
            rows = _read_rows(path, expected)
            cols = [_column(path, rows, expected, n) for n in expected]
            return (kind, *cols)
    raise SchemaError(
        f"{path}: header mismatch: got {','.join(header)!r}, expected one "
        f"of {' or '.join(','.join(h) for h in TRAJECTORY_HEADERS.values())}"
    )
