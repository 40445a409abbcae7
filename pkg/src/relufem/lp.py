"""Thin wrappers around scipy's HiGHS linear programming for H-polytopes.

Every polytope here is the feasible set {x : W x + b >= 0} with W an
(m, n) array of facet normals and b the matching offsets.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .errors import MeshError

UNBOUNDED = 3


def linear_minimum_raw(W: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Minimize cost @ x over {x : W x + b >= 0}; returns the OptimizeResult."""
    return linprog(cost, A_ub=-W, b_ub=b, bounds=[(None, None)] * W.shape[1],
                   method="highs")


def linear_minimum(W: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Minimize cost @ x over {x : W x + b >= 0}.

    Returns (value, argmin). Raises MeshError when the LP is unbounded or
    infeasible, since either means the cell is not a valid bounded polytope.
    """
    res = linear_minimum_raw(W, b, cost)
    if res.status == UNBOUNDED:
        raise MeshError("linear objective unbounded over cell")
    if not res.success:
        raise MeshError(f"LP failed: {res.message}")
    return res.fun, res.x


def is_bounded(W: np.ndarray, b: np.ndarray) -> bool:
    """Check boundedness by sweeping max/min of every coordinate."""
    n = W.shape[1]
    for j in range(n):
        for sign in (1.0, -1.0):
            cost = np.zeros(n)
            cost[j] = sign
            res = linprog(cost, A_ub=-W, b_ub=b,
                          bounds=[(None, None)] * n, method="highs")
            if res.status == UNBOUNDED:
                return False
            if not res.success:
                # infeasible: empty set, vacuously bounded
                return True
    return True


def chebyshev_center(W: np.ndarray, b: np.ndarray):
    """Largest inscribed ball of {W x + b >= 0}.

    Returns (center, radius); radius <= 0 means the interior is empty and
    None is returned when even the relaxed LP is infeasible/unbounded.
    """
    m, n = W.shape
    norms = np.linalg.norm(W, axis=1)
    # maximize r  s.t.  w_i . x + b_i >= r |w_i|
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([-W, norms[:, None]])
    res = linprog(cost, A_ub=A_ub, b_ub=b,
                  bounds=[(None, None)] * n + [(None, None)], method="highs")
    if not res.success:
        return None
    return res.x[:n], res.x[-1]
