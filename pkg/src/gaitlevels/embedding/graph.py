"""Neighbour graph, per-point bandwidth calibration and fuzzy union."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.spatial.distance import cdist

from ..errors import KTooLarge

CALIBRATION_TOL = 1e-5
MIN_K_DIST_SCALE = 1e-3
ABS_SIGMA_FLOOR = 1e-8
_BLOCK = 256


@dataclass(frozen=True)
class NeighborGraph:
    indices: np.ndarray  # (N, k) int64
    distances: np.ndarray  # (N, k) float64, ascending per row
    metric: str = "euclidean"

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    @property
    def n(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True)
class CalibratedRow:
    rho: float
    sigma: float
    residual: float
    clamped: bool


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric membership matrix; stored entries are in (0, 1], diagonal empty."""

    weights: scipy.sparse.csr_matrix

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def edges(self, both_directions: bool = False):
        """(heads, tails, weights); by default each undirected edge once, head < tail."""
        coo = self.weights.tocoo()
        keep = np.ones(coo.nnz, dtype=bool) if both_directions else coo.row < coo.col
        order = np.lexsort((coo.col[keep], coo.row[keep]))
        return (
            coo.row[keep][order].astype(np.int64),
            coo.col[keep][order].astype(np.int64),
            coo.data[keep][order].astype(np.float64),
        )


def knn_graph(x, k: int, metric: str = "euclidean") -> NeighborGraph:
    """Exact brute-force k nearest neighbours (self excluded, ties to lower index)."""
    x = np.asarray(getattr(x, "values", x), dtype=np.float64)
    n = x.shape[0]
    if metric != "euclidean":
        raise ValueError(f"unsupported metric {metric!r}")
    if n < 2:
        raise KTooLarge(f"need at least 2 points for a neighbour graph, got {n}")
    if not 1 <= k <= n - 1:
        raise KTooLarge(f"k must be in [1, {n - 1}], got {k}")

    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        d = cdist(x[start:stop], x)
        rows = np.arange(stop - start)
        d[rows, rows + start] = np.inf
        # stable sort keeps the lower column index first among equal distances
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.take_along_axis(d, order, axis=1)
    return NeighborGraph(indices, distances, metric)


def _membership_sum(shifted: np.ndarray, sigma: float) -> float:
    return float(np.exp(-shifted / sigma).sum())


def sigma_floor(dists) -> float:
    mean = float(np.mean(dists))
    return MIN_K_DIST_SCALE * mean if mean > 0 else ABS_SIGMA_FLOOR


def smooth_knn_calibrate(dists, k: int | None = None, tol: float = CALIBRATION_TOL, n_iter: int = 200) -> CalibratedRow:
    """Find sigma with sum_j exp(-max(0, d_j - rho) / sigma) = log2(k) by bisection.

    ``dists`` is one row of ascending neighbour distances. The sum is
    increasing in sigma and bounded below by the number of neighbours at
    distance rho; when that count already reaches the target the row is
    degenerate and sigma is clamped to the floor.
    """
    d = np.asarray(dists, dtype=np.float64)
    k = d.size if k is None else k
    if d.size != k or k < 1:
        raise ValueError(f"expected {k} distances, got {d.size}")
    rho = float(d[0])
    shifted = np.maximum(d - rho, 0.0)
    target = float(np.log2(k))
    floor = sigma_floor(d)

    n_at_rho = int(np.count_nonzero(shifted == 0.0))
    if n_at_rho >= target - tol:
        return CalibratedRow(rho, floor, _membership_sum(shifted, floor) - target, True)

    lo, hi = 0.0, 1.0
    while _membership_sum(shifted, hi) < target:
        lo, hi = hi, hi * 2.0
    sigma = hi
    residual = _membership_sum(shifted, sigma) - target
    for _ in range(n_iter):
        if abs(residual) < tol:
            break
        sigma = 0.5 * (lo + hi)
        residual = _membership_sum(shifted, sigma) - target
        if residual > 0:
            hi = sigma
        else:
            lo = sigma

    if sigma < floor:
        return CalibratedRow(rho, floor, _membership_sum(shifted, floor) - target, True)
    return CalibratedRow(rho, sigma, residual, False)


def calibrate_graph(g: NeighborGraph, tol: float = CALIBRATION_TOL) -> list[CalibratedRow]:
    return [smooth_knn_calibrate(row, g.k, tol) for row in g.distances]


def directed_memberships(g: NeighborGraph, cal: list[CalibratedRow]) -> scipy.sparse.csr_matrix:
    rho = np.array([c.rho for c in cal])[:, None]
    sigma = np.array([c.sigma for c in cal])[:, None]
    vals = np.exp(-np.maximum(g.distances - rho, 0.0) / sigma)
    rows = np.repeat(np.arange(g.n), g.k)
    p = scipy.sparse.csr_matrix((vals.ravel(), (rows, g.indices.ravel())), shape=(g.n, g.n))
    p.eliminate_zeros()
    return p


def fuzzy_union(p: scipy.sparse.spmatrix) -> scipy.sparse.csr_matrix:
    """Elementwise mu + mu^T - mu * mu^T."""
    p = scipy.sparse.csr_matrix(p)
    pt = p.transpose().tocsr()
    s = (p + pt - p.multiply(pt)).tocsr()
    s.data = np.minimum(s.data, 1.0)
    s.eliminate_zeros()
    s.sort_indices()
    return s


def fuzzy_graph(g: NeighborGraph, cal: list[CalibratedRow]) -> FuzzyGraph:
    return FuzzyGraph(fuzzy_union(directed_memberships(g, cal)))
