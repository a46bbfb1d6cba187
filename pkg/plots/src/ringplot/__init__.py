"""Figure rendering for ringleap CSV artifacts.

This package never recomputes physics: it consumes only the documented CSV
schemas (``levels.csv``, ``regions.csv``, trajectory CSVs) and turns them
into static images.
"""

__version__ = "0.1.0"

from .io import SchemaError, read_levels, read_regions, read_trajectory
from .render import render_portrait, render_trajectory

__all__ = [
    "SchemaError",
    "read_levels",
    "read_regions",
    "read_trajectory",
    "render_portrait",
    "render_trajectory",
]
