"""Cross-entropy layout objective and its stochastic (negative-sampling) optimizer."""

from __future__ import annotations

import numba
import numpy as np

from .graph import FuzzyGraph

REPULSION_EPS = 1e-3
GRAD_CLIP = 4.0


def layout_objective(z, fg: FuzzyGraph, a: float, b: float, eps: float = REPULSION_EPS):
    """Full-batch fuzzy cross entropy over the stored edges and its gradient.

    Each undirected edge with membership mu contributes
    ``-mu log phi(d) - (1 - mu) log(1 - phi(d) + eps)``, with
    phi(d) = 1 / (1 + a d^(2b)). The eps keeps the repulsive term finite at
    coincident points. Returns (loss, gradient with the shape of z).
    """
    z = np.asarray(z, dtype=np.float64)
    heads, tails, mu = fg.edges()
    diff = z[heads] - z[tails]
    s = np.sum(diff * diff, axis=1)  # squared distance

    with np.errstate(divide="ignore", invalid="ignore"):
        sb = np.where(s > 0, s**b, 0.0)
        sb1 = np.where(s > 0, s ** (b - 1.0), 0.0)
    q = 1.0 + a * sb
    phi = 1.0 / q
    rep_arg = 1.0 - phi + eps

    loss = float(np.sum(mu * np.log(q) - (1.0 - mu) * np.log(rep_arg)))

    # d/ds of each term, then chain rule through s = |z_h - z_t|^2
    d_att = mu * a * b * sb1 / q
    d_rep = -(1.0 - mu) * a * b * sb1 / (q * q * rep_arg)
    coef = 2.0 * (d_att + d_rep)
    g = coef[:, None] * diff
    grad = np.zeros_like(z)
    np.add.at(grad, heads, g)
    np.add.at(grad, tails, -g)
    return loss, grad


def _clip(v):
    if v > GRAD_CLIP:
        return GRAD_CLIP
    if v < -GRAD_CLIP:
        return -GRAD_CLIP
    return v


_clip_nb = numba.njit(cache=True)(_clip)


def _epoch_kernel(z, heads, tails, order, neg_offsets, neg_idx, a, b, alpha, gamma):
    dim = z.shape[1]
    for t in numba.prange(order.shape[0]):
        e = order[t]
        i = heads[e]
        j = tails[e]

        d2 = 0.0
        for c in range(dim):
            diff = z[i, c] - z[j, c]
            d2 += diff * diff
        if d2 > 0.0:
            coef = -2.0 * a * b * d2 ** (b - 1.0) / (a * d2**b + 1.0)
        else:
            coef = 0.0
        for c in range(dim):
            g = _clip_nb(coef * (z[i, c] - z[j, c]))
            z[i, c] += g * alpha
            z[j, c] -= g * alpha

        for p in range(neg_offsets[t], neg_offsets[t + 1]):
            k = neg_idx[p]
            if k == i:
                continue
            d2 = 0.0
            for c in range(dim):
                diff = z[i, c] - z[k, c]
                d2 += diff * diff
            if d2 > 0.0:
                coef = 2.0 * gamma * b / ((REPULSION_EPS + d2) * (a * d2**b + 1.0))
            else:
                coef = 0.0
            for c in range(dim):
                if coef > 0.0:
                    g = _clip_nb(coef * (z[i, c] - z[k, c]))
                else:
                    g = GRAD_CLIP
                z[i, c] += g * alpha


_epoch_sequential = numba.njit(cache=True)(_epoch_kernel)
_epoch_parallel = numba.njit(cache=True, parallel=True)(_epoch_kernel)


def epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    """Sampling period of each edge: the heaviest edge is sampled every epoch."""
    return weights.max() / weights


def optimize_layout(
    z: np.ndarray,
    fg: FuzzyGraph,
    a: float,
    b: float,
    n_epochs: int,
    rng: np.random.Generator,
    negative_samples: int = 5,
    learning_rate: float = 1.0,
    repulsion_strength: float = 1.0,
    parallel: bool = False,
) -> np.ndarray:
    """Per-edge SGD with negative sampling; learning rate decays linearly to 0.

    Edges are visited in both directions, in a fresh seeded permutation each
    epoch. Sequential mode is bit-reproducible for a given generator state;
    parallel mode applies updates without synchronisation and is not.
    """
    z = np.ascontiguousarray(z, dtype=np.float64).copy()
    n = z.shape[0]
    heads, tails, w = fg.edges(both_directions=True)
    keep = w >= w.max() / n_epochs
    heads, tails, w = heads[keep], tails[keep], w[keep]

    eps = epochs_per_sample(w, n_epochs)
    eps_neg = eps / negative_samples
    next_sample = eps.copy()
    next_neg = eps_neg.copy()
    kernel = _epoch_parallel if parallel else _epoch_sequential

    for epoch in range(n_epochs):
        active = np.flatnonzero(next_sample <= epoch)
        if active.size:
            n_neg = ((epoch - next_neg[active]) / eps_neg[active]).astype(np.int64)
            n_neg = np.maximum(n_neg, 0)
            next_neg[active] += n_neg * eps_neg[active]
            next_sample[active] += eps[active]

            perm = rng.permutation(active.size)
            order = active[perm]
            n_neg = n_neg[perm]
            offsets = np.zeros(order.size + 1, dtype=np.int64)
            np.cumsum(n_neg, out=offsets[1:])
            neg_idx = rng.integers(0, n, size=int(offsets[-1]), dtype=np.int64)
            alpha = learning_rate * (1.0 - epoch / n_epochs)
            kernel(z, heads, tails, order, offsets, neg_idx, a, b, alpha, repulsion_strength)
    return z
