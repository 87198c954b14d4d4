import numpy as np
from scipy.spatial.distance import pdist, squareform

from .base import ProjectionError

STRESS_RTOL = 1e-9


def raw_stress(X, delta) -> float:
    """Sum over pairs ``i < j`` of ``(||x_i - x_j|| - delta_ij)**2``."""
    return float(np.sum((pdist(X) - squareform(delta, checks=False)) ** 2))


def smacof(delta: np.ndarray, max_iter: int = 300, seed: int = 0, n_dims: int = 2):
    """Metric MDS by stress majorization (Guttman transform, unit weights).

    Starts from a seeded standard-normal configuration and stops after
    ``max_iter`` transforms or once the relative stress improvement falls
    below ``STRESS_RTOL``. ``info["stress"]`` holds the stress of the start
    configuration and of every iterate.
    """
    delta = np.asarray(delta, dtype=np.float64)
    m = delta.shape[0]
    if not np.any(delta > 0):
        raise ProjectionError("zero-variance", "all dissimilarities are zero")
    X = np.random.default_rng(seed).standard_normal((m, n_dims))
    delta_flat = squareform(delta, checks=False)
    d_flat = pdist(X)
    stress = [float(np.sum((d_flat - delta_flat) ** 2))]
    n_done = 0
    for _ in range(max_iter):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d_flat > 0, delta_flat / d_flat, 0.0)
        B = -squareform(ratio)
        np.fill_diagonal(B, -B.sum(axis=1))
        X = B @ X / m
        d_flat = pdist(X)
        stress.append(float(np.sum((d_flat - delta_flat) ** 2)))
        n_done += 1
        prev, cur = stress[-2], stress[-1]
        if prev <= 0 or (prev - cur) / prev < STRESS_RTOL:
            break
    return X, {"stress": np.array(stress), "n_iter": n_done}
