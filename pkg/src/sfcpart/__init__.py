"""Adaptive k^d spacetree grids ordered by discrete space-filling curves.

Exact (rational) boxes and grids, table-driven curves, partition boundaries
and cell classes, the extremal grid families, and the surface-to-volume
analysis built on them.
"""
from .geometry import Box, SpaceParams, Subcube, make_box, root, space
from .partition import Partition, boundary, classify, partition, preclassify, shape
from .sfc import curve, dsfc, order_cells
from .spacetree import Grid, minimal_grid, regular_grid

__all__ = [
    "Box", "SpaceParams", "Subcube", "make_box", "root", "space",
    "Partition", "boundary", "classify", "partition", "preclassify", "shape",
    "curve", "dsfc", "order_cells",
    "Grid", "minimal_grid", "regular_grid",
]

__version__ = "0.1.0"
