import numpy as np

from .base import ProjectionError


def pca_reduce(matrix, variance_fraction: float = 0.95) -> np.ndarray:
    """Principal-component scores covering ``variance_fraction`` of the variance.

    Keeps the smallest number of leading components whose cumulative
    explained variance reaches the fraction. Each component is sign-flipped so
    its largest-magnitude loading is positive.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ProjectionError("bad-input", "PCA needs a 2-D matrix with at least 2 rows")
    if not np.all(np.isfinite(X)):
        raise ProjectionError("bad-input", "PCA input has non-finite entries")
    if not 0.0 < variance_fraction <= 1.0:
        raise ValueError("variance_fraction must lie in (0, 1]")
    Xc = X - X.mean(axis=0)
    U, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    var = S**2
    total = var.sum()
    if total <= 0 or total <= 1e-24 * max(1.0, float(np.abs(X).max()) ** 2):
        raise ProjectionError("zero-variance", "input has zero total variance")
    cum = np.cumsum(var) / total
    q = int(np.searchsorted(cum, variance_fraction - 1e-12) + 1)
    q = min(q, len(S))
    idx = np.argmax(np.abs(Vt[:q]), axis=1)
    signs = np.sign(Vt[np.arange(q), idx])
    signs[signs == 0] = 1.0
    return (U[:, :q] * S[:q]) * signs
