"""Initial coordinates from the normalized graph Laplacian."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
import scipy.sparse.linalg
from scipy.spatial.distance import cdist

log = logging.getLogger(__name__)

DENSE_LIMIT = 3000


class SpectralFailure(RuntimeError):
    pass


def _laplacian_eigenvectors(w: scipy.sparse.csr_matrix, dim: int) -> np.ndarray:
    """Eigenvectors 1..dim (skipping the trivial one) of I - D^-1/2 W D^-1/2."""
    n = w.shape[0]
    deg = np.asarray(w.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    dm = scipy.sparse.diags(inv_sqrt)
    lap = scipy.sparse.identity(n, format="csr") - dm @ w @ dm
    try:
        if n <= DENSE_LIMIT:
            vals, vecs = np.linalg.eigh(lap.toarray())
        else:
            vals, vecs = scipy.sparse.linalg.eigsh(
                lap, k=dim + 1, which="SM", tol=1e-4, v0=np.ones(n), maxiter=n * 5
            )
    except (np.linalg.LinAlgError, scipy.sparse.linalg.ArpackError) as exc:
        raise SpectralFailure(str(exc)) from exc
    order = np.argsort(vals, kind="stable")
    return vecs[:, order[1 : dim + 1]]


def _classical_mds(points: np.ndarray, dim: int) -> np.ndarray:
    m = points.shape[0]
    d2 = cdist(points, points, "sqeuclidean")
    j = np.eye(m) - np.ones((m, m)) / m
    bmat = -0.5 * j @ d2 @ j
    vals, vecs = np.linalg.eigh(bmat)
    order = np.argsort(vals)[::-1][:dim]
    coords = vecs[:, order] * np.sqrt(np.maximum(vals[order], 0.0))
    if coords.shape[1] < dim:
        coords = np.hstack([coords, np.zeros((m, dim - coords.shape[1]))])
    return coords


def spectral_init(w: scipy.sparse.csr_matrix, dim: int, data: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Spectral coordinates; disconnected graphs get one block per component.

    Components are laid out separately and placed at classical-MDS positions
    of their data-space centroids, so separated clusters start apart.
    Raises SpectralFailure if an eigensolver does not converge.
    """
    n = w.shape[0]
    n_comp, labels = scipy.sparse.csgraph.connected_components(w, directed=False)
    if n_comp == 1:
        if n <= dim + 1:
            raise SpectralFailure(f"graph with {n} nodes is too small for a {dim}-d spectral layout")
        return _laplacian_eigenvectors(w, dim)

    centroids = np.vstack([data[labels == c].mean(axis=0) for c in range(n_comp)])
    meta = _classical_mds(centroids, dim)
    sep = cdist(meta, meta)
    np.fill_diagonal(sep, np.inf)
    min_sep = sep.min()
    if not np.isfinite(min_sep) or min_sep <= 0:
        meta = rng.uniform(-1.0, 1.0, size=(n_comp, dim)) * n_comp
        sep = cdist(meta, meta)
        np.fill_diagonal(sep, np.inf)
        min_sep = sep.min()
    meta = meta / min_sep
    radius = 0.3 / np.sqrt(dim)

    out = np.empty((n, dim))
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        if idx.size > dim + 1:
            sub = w[idx][:, idx].tocsr()
            local = _laplacian_eigenvectors(sub, dim)
        else:
            local = rng.uniform(-1.0, 1.0, size=(idx.size, dim))
        scale = np.abs(local).max()
        if scale > 0:
            local = local / scale
        out[idx] = meta[c] + radius * local
    log.debug("spectral init over %d components", n_comp)
    return out
