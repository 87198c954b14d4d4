"""
UMAP-style embedding: fuzzy k-NN graph plus cross-entropy SGD.

Follows the reference algorithm: the neighbor count includes the point
itself, bandwidths are calibrated so the membership strengths of the other
neighbors sum to ``log2(k)``, the directed graph is symmetrized by fuzzy
union and optimized with edge sampling and negative sampling. Initialization
is random (no spectral init).
"""
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.optimize import least_squares
from scipy.sparse.csgraph import connected_components

from .base import ProjectionError

SMOOTH_K_TOLERANCE = 1e-5
MIN_K_DIST_SCALE = 1e-3
NEGATIVE_SAMPLE_RATE = 5


def _curve_target(min_dist, spread=1.0):
    x = np.linspace(0.0, 3.0 * spread, 300)
    y = np.where(x < min_dist, 1.0, np.exp(-(x - min_dist) / spread))
    return x, y


@lru_cache(maxsize=64)
def fit_ab(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Fit ``1 / (1 + a x^(2b))`` to the ``min_dist`` offset exponential.

    Coarse grid over (a, b), then least-squares refinement from the best cell.
    """
    x, y = _curve_target(min_dist, spread)

    def resid(p):
        a, b = p
        return 1.0 / (1.0 + a * x ** (2.0 * b)) - y

    grid_a = np.logspace(-2, 2, 41)
    grid_b = np.linspace(0.2, 2.5, 47)
    xa = x[None, None, :]
    err = ((1.0 / (1.0 + grid_a[:, None, None] * xa ** (2.0 * grid_b[None, :, None])) - y) ** 2).sum(axis=2)
    ia, ib = np.unravel_index(np.argmin(err), err.shape)
    fit = least_squares(resid, x0=[grid_a[ia], grid_b[ib]], bounds=([1e-6, 1e-3], [1e4, 10.0]))
    return float(fit.x[0]), float(fit.x[1])


def knn_from_distances(D: np.ndarray, k: int):
    """k nearest neighbors per row with the point itself first; ties by index."""
    m = D.shape[0]
    Dx = D.copy()
    np.fill_diagonal(Dx, -1.0)
    idx = np.argsort(Dx, axis=1, kind="stable")[:, :k]
    dist = np.take_along_axis(D, idx, axis=1)
    return idx, dist


def smooth_knn(knn_dist: np.ndarray, n_iter: int = 128):
    """Per-point ``rho`` (nearest positive distance) and bandwidth ``sigma``."""
    m, k = knn_dist.shape
    target = np.log2(k)
    rho = np.zeros(m)
    sigma = np.ones(m)
    mean_all = knn_dist.mean()
    for i in range(m):
        others = knn_dist[i, 1:]
        positive = others[others > 0]
        rho[i] = positive[0] if positive.size else 0.0
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(n_iter):
            psum = np.exp(-np.maximum(others - rho[i], 0.0) / mid).sum()
            if abs(psum - target) < SMOOTH_K_TOLERANCE:
                break
            if psum > target:
                hi = mid
                mid = 0.5 * (lo + hi)
            else:
                lo = mid
                mid = mid * 2.0 if np.isinf(hi) else 0.5 * (lo + hi)
        floor = MIN_K_DIST_SCALE * (others.mean() if rho[i] > 0 else mean_all)
        sigma[i] = max(mid, floor)
    return rho, sigma


def fuzzy_graph(D: np.ndarray, n_neighbors: int) -> sp.csr_matrix:
    m = D.shape[0]
    k = min(n_neighbors, m)
    idx, dist = knn_from_distances(D, k)
    rho, sigma = smooth_knn(dist)
    w = np.exp(-np.maximum(dist[:, 1:] - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(m), k - 1)
    G = sp.csr_matrix((w.ravel(), (rows, idx[:, 1:].ravel())), shape=(m, m))
    Gt = G.T.tocsr()
    U = G + Gt - G.multiply(Gt)
    U = sp.csr_matrix(U)
    U.eliminate_zeros()
    return U


@njit(cache=True)
def _clip(v):
    if v > 4.0:
        return 4.0
    if v < -4.0:
        return -4.0
    return v


@njit(cache=True)
def _optimize(Y, heads, tails, eps, a, b, n_epochs, seed):
    np.random.seed(seed)
    m = Y.shape[0]
    n_edges = heads.shape[0]
    eps_neg = eps / NEGATIVE_SAMPLE_RATE
    next_sample = eps.copy()
    next_neg = eps_neg.copy()
    for n in range(n_epochs):
        alpha = 1.0 - n / n_epochs
        for e in range(n_edges):
            if next_sample[e] > n:
                continue
            i = heads[e]
            j = tails[e]
            dx = Y[i, 0] - Y[j, 0]
            dy = Y[i, 1] - Y[j, 1]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                coeff = -2.0 * a * b * d2 ** (b - 1.0) / (a * d2**b + 1.0)
            else:
                coeff = 0.0
            gx = _clip(coeff * dx) * alpha
            gy = _clip(coeff * dy) * alpha
            Y[i, 0] += gx
            Y[i, 1] += gy
            Y[j, 0] -= gx
            Y[j, 1] -= gy
            next_sample[e] += eps[e]

            n_neg = int((n - next_neg[e]) / eps_neg[e])
            for _ in range(n_neg):
                k = np.random.randint(m)
                if k == i:
                    continue
                dx = Y[i, 0] - Y[k, 0]
                dy = Y[i, 1] - Y[k, 1]
                d2 = dx * dx + dy * dy
                if d2 > 0.0:
                    coeff = 2.0 * b / ((0.001 + d2) * (a * d2**b + 1.0))
                    Y[i, 0] += _clip(coeff * dx) * alpha
                    Y[i, 1] += _clip(coeff * dy) * alpha
                else:
                    Y[i, 0] += 4.0 * alpha
                    Y[i, 1] += 4.0 * alpha
            next_neg[e] += n_neg * eps_neg[e]
    return Y


def umap(distances: np.ndarray, n_neighbors: int, min_dist: float, n_epochs: int | None = None, seed: int = 0):
    D = np.asarray(distances, dtype=np.float64)
    m = D.shape[0]
    if n_neighbors < 2:
        raise ProjectionError("bad-parameter", "n_neighbors must be >= 2")
    if n_epochs is None:
        n_epochs = 500 if m <= 10_000 else 200
    G = fuzzy_graph(D, n_neighbors).tocoo()
    n_components, _ = connected_components(G, directed=False)
    if G.nnz == 0:
        raise ProjectionError("disconnected-graph", "k-NN graph has no edges")
    w = G.data
    keep = w >= w.max() / n_epochs
    heads = G.row[keep].astype(np.int64)
    tails = G.col[keep].astype(np.int64)
    w = w[keep]
    eps = w.max() / w

    a, b = fit_ab(float(min_dist))
    rng = np.random.default_rng(seed)
    Y = rng.uniform(-10.0, 10.0, size=(m, 2))
    inner_seed = int(rng.integers(0, 2**31 - 1))
    Y = _optimize(Y, heads, tails, eps, a, b, int(n_epochs), inner_seed)
    return Y, {"a": a, "b": b, "n_epochs": n_epochs, "n_edges": int(heads.size), "n_components": int(n_components)}
