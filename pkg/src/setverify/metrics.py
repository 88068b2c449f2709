"""Similarity measures between two local modes.

Subspace family: each mode (a d x l matrix of descriptor columns) is
represented by the column-orthonormal basis of its span; the principal
angles between two bases come from the SVD of the basis cross-product, and
feed the geodesic (sum of squared angles) and Binet-Cauchy
(sqrt(1 - prod cos^2)) distances.

Exemplar family: the columns are treated as a point set and compared with
the Hausdorff (max of directed max-min Euclidean distances) and modified
Hausdorff (max of directed mean-min distances) measures.
"""

from __future__ import annotations

import numpy as np


def orthonormal_basis(mode: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Column-orthonormal basis of the span of the mode's columns.

    Left singular vectors with singular value above ``rank_tol`` times the
    largest are kept; no mean subtraction is applied.  Raises on an all-zero
    mode.
    """
    mode = np.asarray(mode, dtype=np.float64)
    if mode.ndim != 2:
        raise ValueError("mode must be a 2-D matrix of descriptor columns")
    u, s, _ = np.linalg.svd(mode, full_matrices=False)
    if s[0] <= 0.0:
        raise ValueError("cannot extract a subspace from an all-zero mode")
    rank = int(np.sum(s > rank_tol * s[0]))
    return u[:, :rank]


def principal_angles(basis1: np.ndarray, basis2: np.ndarray) -> np.ndarray:
    """Principal angles between two subspaces, ascending, in [0, pi/2].

    The cosines are the singular values of basis1.T @ basis2; values are
    clamped to [0, 1] to absorb rounding.  Returns min(rank1, rank2) angles.
    """
    if basis1.shape[0] != basis2.shape[0]:
        raise ValueError(f"ambient dimensions differ: {basis1.shape[0]} vs {basis2.shape[0]}")
    cosines = np.linalg.svd(basis1.T @ basis2, compute_uv=False)
    return np.arccos(np.clip(cosines, 0.0, 1.0))


def geodesic_distance(angles: np.ndarray) -> float:
    """Squared arc-length on the Grassmannian: sum of squared angles."""
    return float(np.sum(np.square(angles)))


def binet_cauchy_distance(angles: np.ndarray) -> float:
    """sqrt(1 - prod cos^2(angle)); always in [0, 1]."""
    radicand = 1.0 - np.prod(np.cos(angles) ** 2)
    return float(np.sqrt(np.clip(radicand, 0.0, 1.0)))


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distances between columns of a (d x m) and b (d x n).

    The squared sum runs over the leading axis, which numpy reduces in
    strict index order, so results equal a naive per-coordinate
    accumulation bit for bit.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("modes must be 2-D matrices of descriptor columns")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"descriptor dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[1] == 0 or b.shape[1] == 0:
        raise ValueError("modes must contain at least one column")
    sq = ((a[:, :, None] - b[:, None, :]) ** 2).sum(axis=0)
    return np.sqrt(sq)


def hausdorff_distance(mode_a: np.ndarray, mode_b: np.ndarray) -> float:
    """max(max-min(A->B), max-min(B->A)) over column points."""
    d = _pairwise_distances(mode_a, mode_b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def modified_hausdorff_distance(mode_a: np.ndarray, mode_b: np.ndarray) -> float:
    """max of the two directed mean-of-min distances (outlier-robust)."""
    d = _pairwise_distances(mode_a, mode_b)
    return float(max(d.min(axis=1).mean(), d.min(axis=0).mean()))
