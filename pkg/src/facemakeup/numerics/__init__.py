"""Numerical kernels: sparse SPD solves, 3D convex hulls, simplex search."""

from .hull import Hull3, hull_union_volume, quickhull3
from .simplex import SimplexResult, nelder_mead
from .sparse import SparseMatrix, cg_solve

__all__ = [
    "Hull3",
    "SimplexResult",
    "SparseMatrix",
    "cg_solve",
    "hull_union_volume",
    "nelder_mead",
    "quickhull3",
]
