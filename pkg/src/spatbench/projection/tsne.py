"""Exact t-SNE (quadratic cost), no tree approximation."""
import numpy as np

from .base import ProjectionError

EXAGGERATION = 12.0
MOMENTUM_SWITCH = 250
MIN_GAIN = 0.01
_LN2 = np.log(2.0)


def calibrate_affinities(sq_dist: np.ndarray, perplexity: float, tol: float = 1e-5, max_steps: int = 200):
    """Conditional Gaussian affinities with per-row perplexity matched by bisection.

    Works on squared distances. Returns the row-stochastic conditional matrix
    ``P[i, j] = p(j | i)`` and the achieved perplexities ``2**H_i`` (bits).
    """
    D = np.asarray(sq_dist, dtype=np.float64)
    m = D.shape[0]
    off = ~np.eye(m, dtype=bool)
    # shift by the nearest off-diagonal distance for stability
    Dm = np.where(off, D, np.inf)
    shift = Dm.min(axis=1, keepdims=True)
    Ds = np.where(off, D - shift, 0.0)
    target = np.log2(perplexity)

    beta = np.ones(m)
    lo = np.zeros(m)
    hi = np.full(m, np.inf)

    def entropy(beta):
        W = np.exp(-Ds * beta[:, None]) * off
        s = W.sum(axis=1)
        P = W / s[:, None]
        H = (np.log(s) + beta * (Ds * P).sum(axis=1)) / _LN2
        return P, H

    P, H = entropy(beta)
    for _ in range(max_steps):
        active = np.abs(np.exp2(H) - perplexity) > tol
        if not active.any():
            break
        too_flat = H > target
        lo = np.where(active & too_flat, beta, lo)
        hi = np.where(active & ~too_flat, beta, hi)
        step = np.where(
            np.isinf(hi), beta * 2.0, np.where(too_flat | (lo > 0), 0.5 * (lo + hi), beta / 2.0)
        )
        beta = np.where(active, step, beta)
        P, H = entropy(beta)
    return P, np.exp2(H)


def _sq_dists(Y):
    sq = np.einsum("ij,ij->i", Y, Y)
    return np.maximum(sq[:, None] + sq[None, :] - 2.0 * Y @ Y.T, 0.0)


def _kl(P, Q):
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))


def tsne(distances: np.ndarray, perplexity: float, n_iter: int, learning_rate: float, seed: int = 0):
    """Embed a distance matrix in 2-D.

    Returns ``(Y, info)``; ``info`` holds the achieved perplexities and the
    KL divergence at the start of every iteration plus after the last one.
    """
    D = np.asarray(distances, dtype=np.float64)
    m = D.shape[0]
    if not 2 <= perplexity < m - 1:
        raise ProjectionError(
            "perplexity-infeasible", f"perplexity {perplexity} needs 2 <= perplexity < {m - 1}"
        )
    Pc, achieved = calibrate_affinities(D**2, perplexity)
    P = (Pc + Pc.T) / (2.0 * m)
    P = np.maximum(P, 1e-12)
    np.fill_diagonal(P, 0.0)

    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, 1e-4, size=(m, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    n_exag = min(250, n_iter // 4)
    kl = np.empty(n_iter + 1)

    for it in range(n_iter + 1):
        num = 1.0 / (1.0 + _sq_dists(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        np.fill_diagonal(Q, 0.0)
        kl[it] = _kl(P, Q)
        if it == n_iter:
            break
        exag = EXAGGERATION if it < n_exag else 1.0
        momentum = 0.5 if it < MOMENTUM_SWITCH else 0.8
        W = (exag * P - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
        same = (grad > 0) == (update > 0)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, MIN_GAIN, out=gains)
        update = momentum * update - learning_rate * gains * grad
        Y = Y + update

    info = {"perplexities": achieved, "kl": kl, "n_exaggeration": n_exag}
    return Y, info
