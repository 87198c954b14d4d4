"""
Layout quality metrics.

Accuracy metrics compare the layout against high-dimensional distances
(trustworthiness, continuity, Shepard-diagram rank correlation) or labels
(neighborhood hit). Cluster-separation metrics only look at the layout and
the labels (distance consistency, silhouette, Calinski-Harabasz,
Davies-Bouldin). Neighbor ties are broken by ascending point index
throughout, so coincident points (SOM layouts) are handled deterministically.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .models import DistanceMatrix
from .projection.base import Layout

DEFAULT_K = 7
SHEPARD_ALL_PAIRS_MAX_M = 2000
SHEPARD_PAIR_BUDGET = 2_000_000


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricVector:
    trust: float
    cont: float
    shepard: float
    nh: float
    dsc: float
    silhouette: float
    ch_raw: float
    db_raw: float
    k_neighbors: int = DEFAULT_K

    def __post_init__(self):
        for name in ("trust", "cont", "nh", "dsc"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1 + 1e-12:
                raise MetricError(f"{name}={v} outside [0, 1]")
        for name in ("shepard", "silhouette"):
            v = getattr(self, name)
            if not -1 - 1e-12 <= v <= 1 + 1e-12:
                raise MetricError(f"{name}={v} outside [-1, 1]")
        if not (self.ch_raw >= 0 and self.db_raw >= 0):
            raise MetricError("ch_raw and db_raw must be non-negative")
        if self.k_neighbors < 1:
            raise MetricError("k_neighbors must be >= 1")

    def as_dict(self) -> dict:
        return asdict(self)


def _dist(x) -> np.ndarray:
    if isinstance(x, DistanceMatrix):
        return x.values
    return np.asarray(x, dtype=np.float64)


def _positions(layout) -> np.ndarray:
    return layout.positions if isinstance(layout, Layout) else np.asarray(layout, dtype=np.float64)


def layout_distances(layout) -> np.ndarray:
    Y = _positions(layout)
    diff = Y[:, None, :] - Y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def neighbor_order(D: np.ndarray) -> np.ndarray:
    """Row-wise neighbor indices by increasing distance, self excluded."""
    Dx = np.array(D, dtype=np.float64, copy=True)
    np.fill_diagonal(Dx, -np.inf)
    return np.argsort(Dx, axis=1, kind="stable")[:, 1:]


def _ranks(order: np.ndarray) -> np.ndarray:
    m = order.shape[0]
    R = np.zeros((m, m), dtype=np.int64)
    np.put_along_axis(R, order, np.arange(1, m)[None, :].repeat(m, axis=0), axis=1)
    return R


def _intrusion_score(D_ref, D_emb, k):
    m = D_ref.shape[0]
    ranks_ref = _ranks(neighbor_order(D_ref))
    nn_emb = neighbor_order(D_emb)[:, :k]
    r = np.take_along_axis(ranks_ref, nn_emb, axis=1)
    penalty = np.where(r > k, r - k, 0).sum()
    return 1.0 - 2.0 / (m * k * (2.0 * m - 3.0 * k - 1.0)) * penalty


def _check_rank_args(d_high, layout, k):
    D = _dist(d_high)
    L = layout_distances(layout)
    m = D.shape[0]
    if L.shape[0] != m:
        raise MetricError(f"layout has {L.shape[0]} points, distances cover {m}")
    if not np.all(np.isfinite(D)) or not np.all(np.isfinite(L)):
        raise MetricError("non-finite distances")
    if k < 1 or k >= m or 2 * m - 3 * k - 1 <= 0:
        raise MetricError(f"k={k} too large for m={m} (needs 2m - 3k - 1 > 0)")
    return D, L


def rank_based_metrics(d_high, layout, k: int = DEFAULT_K) -> tuple[float, float]:
    """Trustworthiness and continuity at neighborhood size ``k``."""
    D, L = _check_rank_args(d_high, layout, k)
    return float(_intrusion_score(D, L, k)), float(_intrusion_score(L, D, k))


def trustworthiness(d_high, layout, k: int = DEFAULT_K) -> float:
    return rank_based_metrics(d_high, layout, k)[0]


def continuity(d_high, layout, k: int = DEFAULT_K) -> float:
    return rank_based_metrics(d_high, layout, k)[1]


def neighborhood_hit(layout, labels, k: int = DEFAULT_K) -> float:
    """Mean fraction of each point's ``k`` layout neighbors that share its label."""
    L = layout_distances(layout)
    m = L.shape[0]
    y = np.asarray(labels)
    if len(y) != m:
        raise MetricError("labels and layout differ in length")
    if m < k + 1:
        raise MetricError(f"neighborhood hit needs m >= k + 1 (m={m}, k={k})")
    nn = neighbor_order(L)[:, :k]
    return float((y[nn] == y[:, None]).mean())


def _spearman(a, b) -> float:
    ra = rankdata(a)
    rb = rankdata(b)
    ra -= ra.mean()
    rb -= rb.mean()
    den = np.sqrt((ra @ ra) * (rb @ rb))
    if den == 0:
        raise MetricError("constant distance vector; Spearman correlation undefined")
    return float(np.clip((ra @ rb) / den, -1.0, 1.0))


def shepard_correlation(d_high, layout, pair_budget: int | None = None, seed: int = 0) -> float:
    """Spearman rank correlation between high-dimensional and layout distances.

    All ``m(m-1)/2`` pairs are used unless their count exceeds
    ``pair_budget``, in which case that many pairs are sampled uniformly
    (with replacement) using ``seed``. With ``pair_budget=None`` the budget is
    unlimited for ``m <= 2000`` and two million pairs beyond.
    """
    D = _dist(d_high)
    Y = _positions(layout)
    m = D.shape[0]
    if Y.shape[0] != m:
        raise MetricError("layout and distance matrix differ in size")
    n_pairs = m * (m - 1) // 2
    if pair_budget is None and m > SHEPARD_ALL_PAIRS_MAX_M:
        pair_budget = SHEPARD_PAIR_BUDGET
    if pair_budget is not None and n_pairs > pair_budget:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, m, size=pair_budget)
        j = rng.integers(0, m - 1, size=pair_budget)
        j = j + (j >= i)
        hi = D[i, j]
        lo = np.sqrt(((Y[i] - Y[j]) ** 2).sum(axis=1))
    else:
        iu = np.triu_indices(m, 1)
        hi = D[iu]
        lo = layout_distances(Y)[iu]
    return _spearman(hi, lo)


def _codes(labels):
    classes, codes = np.unique(np.asarray(labels), return_inverse=True)
    return classes, codes


def cluster_separation_metrics(layout, labels) -> tuple[float, float, float, float]:
    """Distance consistency, silhouette, Calinski-Harabasz and Davies-Bouldin.

    A class centroid that coincides with another makes Davies-Bouldin
    undefined; it is then reported as ``inf``. Calinski-Harabasz is ``inf``
    when all classes collapse to distinct points (zero within-class scatter).
    """
    Y = _positions(layout)
    m = Y.shape[0]
    classes, y = _codes(labels)
    k = len(classes)
    if len(y) != m:
        raise MetricError("labels and layout differ in length")
    if k < 2:
        raise MetricError("cluster separation metrics need at least 2 classes")
    if m < k + 1:
        raise MetricError("need m >= k + 1")

    sizes = np.bincount(y, minlength=k).astype(np.float64)
    centroids = np.zeros((k, 2))
    np.add.at(centroids, y, Y)
    centroids /= sizes[:, None]

    # distance consistency: nearest centroid is own centroid (ties by class index)
    dc = np.sqrt(((Y[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2))
    dsc = float((np.argmin(dc, axis=1) == y).mean())

    # silhouette
    L = layout_distances(Y)
    sums = np.zeros((m, k))
    for c in range(k):
        sums[:, c] = L[:, y == c].sum(axis=1)
    own = sizes[y]
    a = np.where(own > 1, sums[np.arange(m), y] / np.maximum(own - 1, 1), 0.0)
    means = sums / sizes[None, :]
    means[np.arange(m), y] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where((own > 1) & (denom > 0), (b - a) / denom, 0.0)
    silhouette = float(s.mean())

    # Calinski-Harabasz
    center = Y.mean(axis=0)
    between = float((sizes * ((centroids - center) ** 2).sum(axis=1)).sum())
    within = float(((Y - centroids[y]) ** 2).sum())
    if within == 0:
        ch = np.inf if between > 0 else 0.0
    else:
        ch = (between / (k - 1)) / (within / (m - k))

    # Davies-Bouldin
    scatter = np.zeros(k)
    np.add.at(scatter, y, np.sqrt(((Y - centroids[y]) ** 2).sum(axis=1)))
    scatter /= sizes
    cd = np.sqrt(((centroids[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2))
    off = ~np.eye(k, dtype=bool)
    if np.any(cd[off] == 0):
        db = np.inf
    else:
        with np.errstate(divide="ignore"):
            R = np.where(off, (scatter[:, None] + scatter[None, :]) / np.where(off, cd, 1.0), -np.inf)
        db = float(R.max(axis=1).mean())
    return dsc, silhouette, float(ch), float(db)


def evaluate_layout(d_high, layout, labels, k: int = DEFAULT_K, pair_budget: int | None = None,
                    seed: int = 0) -> MetricVector:
    """All eight raw metrics of one layout."""
    trust, cont = rank_based_metrics(d_high, layout, k)
    dsc, silhouette, ch, db = cluster_separation_metrics(layout, labels)
    return MetricVector(
        trust=trust,
        cont=cont,
        shepard=shepard_correlation(d_high, layout, pair_budget, seed),
        nh=neighborhood_hit(layout, labels, k),
        dsc=dsc,
        silhouette=silhouette,
        ch_raw=ch,
        db_raw=db,
        k_neighbors=k,
    )
