import numpy as np

from .base import ProjectionError


def train_som(X: np.ndarray, grid_m: int, grid_n: int, epochs: int, seed: int = 0,
              lr_start: float = 0.5, lr_end: float = 0.01):
    """Online rectangular SOM.

    Learning rate decays linearly ``lr_start -> lr_end`` and the Gaussian
    neighborhood radius linearly ``max(grid_m, grid_n) / 2 -> 1`` over all
    ``epochs * m`` presentations. Returns unit weights of shape
    ``(grid_m * grid_n, p)``; unit ``u`` sits at grid cell
    ``(u // grid_n, u % grid_n)``.
    """
    X = np.asarray(X, dtype=np.float64)
    m, p = X.shape
    rng = np.random.default_rng(seed)
    lo, hi = X.min(axis=0), X.max(axis=0)
    weights = lo + rng.random((grid_m * grid_n, p)) * (hi - lo)
    cells = np.array([(i, j) for i in range(grid_m) for j in range(grid_n)], dtype=np.float64)

    r0 = max(grid_m, grid_n) / 2.0
    total = epochs * m
    t = 0
    for _ in range(epochs):
        for idx in rng.permutation(m):
            frac = t / (total - 1) if total > 1 else 1.0
            lr = lr_start + (lr_end - lr_start) * frac
            radius = r0 + (1.0 - r0) * frac
            x = X[idx]
            bmu = int(np.argmin(((weights - x) ** 2).sum(axis=1)))
            g2 = ((cells - cells[bmu]) ** 2).sum(axis=1)
            h = np.exp(-g2 / (2.0 * radius**2))
            weights += (lr * h)[:, None] * (x - weights)
            t += 1
    return weights, cells


def best_matching_units(X, weights) -> np.ndarray:
    """Index of the closest unit per row; lowest unit index wins ties."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.int64)
    for start in range(0, X.shape[0], 256):
        chunk = X[start:start + 256]
        d2 = ((chunk[:, None, :] - weights[None, :, :]) ** 2).sum(axis=2)
        out[start:start + 256] = np.argmin(d2, axis=1)
    return out


def som_layout(X, grid_m: int, grid_n: int, epochs: int, seed: int = 0):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ProjectionError("bad-input", "SOM needs at least 2 inputs")
    weights, cells = train_som(X, grid_m, grid_n, epochs, seed)
    bmu = best_matching_units(X, weights)
    err = float(np.sqrt(((X - weights[bmu]) ** 2).sum(axis=1)).mean())
    return cells[bmu], {"quantization_error": err, "bmu": bmu}
