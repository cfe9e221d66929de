"""Derivative-free Nelder-Mead simplex minimization.

Standard coefficients (reflection 1, expansion 2, contraction 0.5,
shrink 0.5), documented here so fitted transforms are reproducible.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

REFLECTION = 1.0
EXPANSION = 2.0
CONTRACTION = 0.5
SHRINK = 0.5


class SimplexResult(NamedTuple):
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def nelder_mead(objective: Callable[[np.ndarray], float], x0,
                scale: float = 0.1, tol: float = 1e-8,
                max_iter: int = 2000) -> SimplexResult:
    """Minimize ``objective`` from ``x0`` with a simplex of edge ``scale``.

    Stops when the simplex diameter or the spread of vertex values drops
    below ``tol``; after ``max_iter`` iterations returns the best vertex
    with ``converged=False`` instead of raising.  The best value never
    exceeds ``objective(x0)``.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    f0 = float(objective(x0))
    if not np.isfinite(f0):
        raise ValueError("objective not finite at the starting point")

    dim = x0.size
    verts = np.tile(x0, (dim + 1, 1))
    for i in range(dim):
        verts[i + 1, i] += scale
    values = np.array([f0] + [float(objective(v)) for v in verts[1:]])

    iterations = 0
    converged = False
    while iterations < max_iter:
        order = values.argsort(kind="stable")
        verts, values = verts[order], values[order]

        diameter = np.linalg.norm(verts[1:] - verts[0], axis=1).max()
        spread = values[-1] - values[0]
        if diameter < tol or spread < tol:
            converged = True
            break
        iterations += 1

        centroid = verts[:-1].mean(axis=0)
        worst = verts[-1]
        reflected = centroid + REFLECTION * (centroid - worst)
        f_ref = float(objective(reflected))

        if f_ref < values[0]:
            expanded = centroid + EXPANSION * (centroid - worst)
            f_exp = float(objective(expanded))
            if f_exp < f_ref:
                verts[-1], values[-1] = expanded, f_exp
            else:
                verts[-1], values[-1] = reflected, f_ref
        elif f_ref < values[-2]:
            verts[-1], values[-1] = reflected, f_ref
        else:
            if f_ref < values[-1]:
                base, f_base = reflected, f_ref
            else:
                base, f_base = worst, values[-1]
            contracted = centroid + CONTRACTION * (base - centroid)
            f_con = float(objective(contracted))
            if f_con < f_base:
                verts[-1], values[-1] = contracted, f_con
            else:
                verts[1:] = verts[0] + SHRINK * (verts[1:] - verts[0])
                values[1:] = [float(objective(v)) for v in verts[1:]]

    best = int(values.argmin())
    return SimplexResult(x=verts[best].copy(), value=float(values[best]),
                         iterations=iterations, converged=converged)
