"""Perron roots of sparse nonnegative matrices by power iteration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import NoConvergence

TOL = 1e-12
MAX_ITER = 100_000


def strong_components(matrix: sp.csr_matrix):
    """Strongly connected components of the nonzero pattern."""
    return connected_components(matrix, directed=True, connection="strong")


def graph_period(matrix: sp.csr_matrix) -> int:
    """Period of a strongly connected nonzero pattern (gcd of cycle lengths)."""
    m = sp.csr_matrix(matrix)
    n = m.shape[0]
    order, _ = breadth_first_order(m, 0, directed=True, return_predecessors=True)
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    indptr, indices = m.indptr, m.indices
    for u in order:
        nbrs = indices[indptr[u]:indptr[u + 1]]
        fresh = nbrs[level[nbrs] < 0]
        level[fresh] = level[u] + 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    diffs = np.abs(level[rows] + 1 - level[indices])
    g = 0
    for d in np.unique(diffs):
        g = math.gcd(g, int(d))
        if g == 1:
            break
    return g


def is_primitive(matrix: sp.csr_matrix) -> bool:
    ncomp, _ = strong_components(matrix)
    if ncomp != 1:
        return False
    return graph_period(matrix) == 1


@dataclass
class PowerResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float


def power_iteration(matrix, start=None, tol=TOL, max_iter=MAX_ITER, shift=0.0) -> PowerResult:
    """Dominant eigenpair of a nonnegative irreducible matrix.

    ``shift`` adds ``shift * I`` during iteration (needed for periodic
    patterns); the returned eigenvalue has it removed. The eigenvalue is the
    l1 growth ratio; iteration stops once
    ``||M v - lam v||_1 / ||v||_1 <= tol``.
    """
    n = matrix.shape[0]
    v = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    v /= v.sum()
    lam = 0.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = matrix @ v
        if shift:
            w = w + shift * v
        lam = w.sum()
        if lam <= 0.0:
            return PowerResult(0.0, v, it, 0.0)
        residual = np.abs(w - lam * v).sum()
        v = w / lam
        if residual <= tol * max(lam, 1e-300):
            break
    else:
        raise NoConvergence(f"power iteration did not converge in {max_iter} steps "
                            f"(residual {residual:.3e})")
    return PowerResult(lam - shift, v, it, residual)


def perron_root(matrix: sp.csr_matrix, tol=TOL, max_iter=MAX_ITER) -> float:
    """Perron root of an irreducible nonnegative matrix (periodic allowed)."""
    n = matrix.shape[0]
    if n == 1:
        return float(matrix[0, 0])
    if matrix.nnz == 0:
        return 0.0
    shift = 0.0
    if graph_period(matrix) != 1:
        shift = float(abs(matrix).sum(axis=1).max()) / 2
    return power_iteration(matrix, tol=tol, max_iter=max_iter, shift=shift).value
