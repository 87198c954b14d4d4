"""
Topic models and document distances.

Every model returns a :class:`DocumentRepresentation`: an ``m x K`` matrix of
document vectors tagged with the distance metric used to compare them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.spatial.distance import pdist, squareform

from .corpus import Corpus, tfidf_weight

METHODS = ("VSM", "LSI", "NMF", "LDA", "EXT")
METRICS = ("cosine", "jensen-shannon", "euclidean")


class ModelError(ValueError):
    """Raised when a topic model cannot be fitted on the given input."""


@dataclass(frozen=True, eq=False)
class DocumentRepresentation:
    """Document vectors plus the metric that compares them.

    ``matrix`` is dense except for VSM, which keeps the (possibly weighted)
    sparse document-term matrix. ``topic_term`` holds one topic per row for
    LSI, NMF and LDA. ``info`` carries fit diagnostics such as the NMF
    objective trace.
    """

    matrix: np.ndarray | sp.csr_matrix
    metric: str
    model_tag: str
    topic_term: np.ndarray | None = None
    tfidf_applied: bool | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.model_tag not in METHODS:
            raise ValueError(f"unknown model tag {self.model_tag!r}")
        if (self.topic_term is not None) != (self.model_tag in ("LSI", "NMF", "LDA")):
            raise ValueError("topic_term must be present exactly for LSI, NMF and LDA")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)

    def topic_weights(self) -> np.ndarray:
        """Non-negative, row-stochastic document-topic weights for linear-combination layouts.

        LSI coordinates may be negative, so their absolute values are used.
        """
        if self.topic_term is None:
            raise ModelError(f"{self.model_tag} has no topics")
        theta = np.abs(self.dense()) if self.model_tag == "LSI" else self.dense().copy()
        sums = theta.sum(axis=1)
        zero = np.flatnonzero(sums <= 0)
        if zero.size:
            raise ModelError(f"all-zero topic weights for documents {zero[:10].tolist()}")
        return theta / sums[:, None]

    def topics(self) -> "DocumentRepresentation":
        """The topic vectors as a representation of their own (same metric)."""
        if self.topic_term is None:
            raise ModelError(f"{self.model_tag} has no topics")
        return DocumentRepresentation(
            matrix=np.asarray(self.topic_term), metric=self.metric, model_tag="EXT", info={"topics_of": self.model_tag}
        )


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    metric: str = "euclidean"

    def __post_init__(self):
        d = np.asarray(self.values, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.all(np.isfinite(d)):
            raise ValueError("distance matrix has non-finite entries")
        if np.any(d < 0):
            raise ValueError("distance matrix has negative entries")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix diagonal must be zero")
        if not np.allclose(d, d.T, rtol=0, atol=1e-12):
            raise ValueError("distance matrix is not symmetric")
        object.__setattr__(self, "values", d)

    @property
    def m(self) -> int:
        return self.values.shape[0]


def _as_counts(data) -> sp.csr_matrix:
    if isinstance(data, Corpus):
        return data.dtm
    return sp.csr_matrix(data, dtype=np.float64)


def _check_topic_count(n_topics, m, n):
    if n_topics is None:
        raise ModelError("n_topics is required")
    if not 1 <= n_topics <= min(m, n):
        raise ModelError(f"n_topics={n_topics} outside [1, min(m, n)={min(m, n)}]")


def fit_representation(
    data,
    method: str,
    n_topics: int | None = None,
    *,
    tfidf: bool = False,
    seed: int = 0,
    **params,
) -> DocumentRepresentation:
    """Fit one topic model (or passthrough) on a corpus or count matrix.

    Parameters
    ----------
    data : Corpus or array-like
        Raw counts. A pre-weighted matrix is accepted for VSM/LSI/NMF.
    method : {"VSM", "LSI", "NMF", "LDA", "EXT"}
    n_topics : int, optional
        Topic count ``K`` for LSI, NMF and LDA.
    tfidf : bool
        Weight ``data`` with :func:`~spatbench.corpus.tfidf_weight` first.
        Rejected for LDA and EXT.
    seed : int
        Seeds every random choice of the fit.
    **params
        ``max_iter``/``tol`` (NMF), ``dirichlet_alpha``/``dirichlet_beta``/
        ``gibbs_iters`` (LDA), ``embeddings`` (EXT: array or file path).
    """
    method = method.upper()
    if method not in METHODS:
        raise ModelError(f"unknown topic model {method!r}")
    if method in ("LDA", "EXT") and tfidf:
        raise ModelError(f"{method} does not accept tf-idf weighted input")

    if method == "EXT":
        emb = params.get("embeddings")
        if emb is None:
            raise ModelError("EXT needs an 'embeddings' matrix or file")
        mat = read_embeddings(emb) if isinstance(emb, (str, Path)) else np.asarray(emb, dtype=np.float64)
        m = data.m if isinstance(data, Corpus) else (None if data is None else np.shape(data)[0])
        if m is not None and mat.shape[0] != m:
            raise ModelError(f"embedding file has {mat.shape[0]} rows, corpus has {m} documents")
        return DocumentRepresentation(matrix=mat, metric="cosine", model_tag="EXT", tfidf_applied=None)

    counts = _as_counts(data)
    A = tfidf_weight(counts) if tfidf else counts
    m, n = A.shape

    if method == "VSM":
        return DocumentRepresentation(matrix=A, metric="cosine", model_tag="VSM", tfidf_applied=tfidf)
    _check_topic_count(n_topics, m, n)
    if method == "LSI":
        doc, topics = lsi(A, n_topics, seed=seed)
        return DocumentRepresentation(doc, "cosine", "LSI", topics, tfidf_applied=tfidf)
    if method == "NMF":
        W, H, trace = nmf(A, n_topics, seed=seed, max_iter=params.get("max_iter", 200), tol=params.get("tol", 1e-4))
        return DocumentRepresentation(W, "cosine", "NMF", H, tfidf_applied=tfidf, info={"objective": trace})
    K = n_topics
    theta, phi = lda_gibbs(
        A,
        K,
        alpha=params.get("dirichlet_alpha", 50.0 / K),
        beta=params.get("dirichlet_beta", 0.01),
        n_iter=params.get("gibbs_iters", 500),
        seed=seed,
    )
    return DocumentRepresentation(theta, "jensen-shannon", "LDA", phi, tfidf_applied=None)


def lsi(A, n_topics: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Truncated SVD ``A ~ U_K S_K V_K^T``.

    Returns document coordinates ``U_K S_K`` and the top right singular
    vectors as rows. Each singular vector is sign-flipped so that its
    largest-magnitude entry is positive.
    """
    m, n = A.shape
    if m * n <= 4_000_000 or n_topics >= min(m, n) - 1:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.float64)
        try:
            U, S, Vt = np.linalg.svd(dense, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise ModelError(f"SVD did not converge: {exc}") from exc
        U, S, Vt = U[:, :n_topics], S[:n_topics], Vt[:n_topics]
    else:
        from scipy.sparse.linalg import svds

        v0 = np.random.default_rng(seed).uniform(-1, 1, size=min(m, n))
        U, S, Vt = svds(sp.csr_matrix(A), k=n_topics, v0=v0)
        order = np.argsort(-S, kind="stable")
        U, S, Vt = U[:, order], S[order], Vt[order]
    idx = np.argmax(np.abs(Vt), axis=1)
    signs = np.sign(Vt[np.arange(len(idx)), idx])
    signs[signs == 0] = 1.0
    U = U * signs
    Vt = Vt * signs[:, None]
    return U * S, Vt


def _frobenius_sq(A, W, H, dense_A):
    if dense_A is not None:
        R = dense_A - W @ H
        return float(np.einsum("ij,ij->", R, R))
    a2 = float(A.multiply(A).sum())
    cross = float(np.einsum("ij,ij->", A @ H.T, W))
    return a2 - 2.0 * cross + float(np.einsum("ij,ij->", W.T @ W, H @ H.T))


def nmf(A, n_topics: int, seed: int = 0, max_iter: int = 200, tol: float = 1e-4, eps: float = 1e-12):
    """Frobenius NMF by Lee-Seung multiplicative updates.

    Returns ``W`` (m x K), ``H`` (K x n) and the squared-error trace, one
    value per completed sweep plus the initial value.
    """
    sparse = sp.issparse(A)
    A = sp.csr_matrix(A) if sparse else np.asarray(A, dtype=np.float64)
    m, n = A.shape
    if sparse and A.nnz and A.data.min() < 0 or not sparse and A.min() < 0:
        raise ModelError("NMF needs a non-negative matrix")
    dense_A = A.toarray() if sparse and m * n <= 10_000_000 else (None if sparse else A)
    rng = np.random.default_rng(seed)
    mean = A.sum() / (m * n)
    scale = np.sqrt(mean / n_topics) if mean > 0 else 1.0
    W = (1.0 - rng.random((m, n_topics))) * scale
    H = (1.0 - rng.random((n_topics, n))) * scale

    trace = [_frobenius_sq(A, W, H, dense_A)]
    for _ in range(max_iter):
        H *= np.asarray((A.T @ W).T) / (W.T @ W @ H + eps)
        W *= np.asarray(A @ H.T) / (W @ (H @ H.T) + eps)
        trace.append(_frobenius_sq(A, W, H, dense_A))
        prev, cur = trace[-2], trace[-1]
        if prev > 0 and (prev - cur) / prev < tol:
            break
    return W, H, np.array(trace)


@njit(cache=True)
def _gibbs_sweep(docs, words, z, ndk, nkw, nk, alpha, beta, vbeta, u):
    K = ndk.shape[1]
    cum = np.empty(K)
    for t in range(words.shape[0]):
        d = docs[t]
        w = words[t]
        k = z[t]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for j in range(K):
            total += (ndk[d, j] + alpha) * (nkw[j, w] + beta) / (nk[j] + vbeta)
            cum[j] = total
        r = u[t] * total
        k = 0
        while k < K - 1 and cum[k] <= r:
            k += 1
        z[t] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


def lda_gibbs(counts, n_topics: int, alpha: float, beta: float, n_iter: int = 500, seed: int = 0):
    """Collapsed Gibbs sampling for LDA with symmetric priors.

    Returns smoothed document-topic proportions ``theta`` (m x K) and
    topic-term distributions ``phi`` (K x n) from the final sample.
    """
    C = sp.csr_matrix(counts)
    if C.nnz and (C.data.min() < 0 or not np.allclose(C.data, np.round(C.data))):
        raise ModelError("LDA needs raw non-negative integer counts")
    if alpha <= 0 or beta <= 0:
        raise ModelError("Dirichlet priors must be positive")
    m, n = C.shape
    K = n_topics
    reps = np.round(C.data).astype(np.int64)
    docs = np.repeat(np.repeat(np.arange(m), np.diff(C.indptr)), reps)
    words = np.repeat(C.indices.astype(np.int64), reps)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=words.shape[0])
    ndk = np.zeros((m, K), dtype=np.int64)
    nkw = np.zeros((K, n), dtype=np.int64)
    np.add.at(ndk, (docs, z), 1)
    np.add.at(nkw, (z, words), 1)
    nk = nkw.sum(axis=1)
    for _ in range(n_iter):
        _gibbs_sweep(docs, words, z, ndk, nkw, nk, float(alpha), float(beta), float(n * beta), rng.random(words.shape[0]))

    theta = (ndk + alpha) / (ndk.sum(axis=1, keepdims=True) + K * alpha)
    phi = (nkw + beta) / (nk[:, None] + n * beta)
    return theta, phi


def read_embeddings(path: str | Path) -> np.ndarray:
    """Read an ``m K`` header followed by ``m`` rows of ``K`` floats."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ModelError(f"empty embedding file {path}")
    try:
        m, K = (int(x) for x in lines[0].split())
    except ValueError:
        raise ModelError(f"malformed embedding header {lines[0]!r}") from None
    if len(lines) - 1 != m:
        raise ModelError(f"embedding file declares {m} rows but holds {len(lines) - 1}")
    try:
        mat = np.array([[float(x) for x in ln.split()] for ln in lines[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ModelError(f"malformed embedding entry: {exc}") from None
    if mat.shape != (m, K):
        raise ModelError(f"embedding rows must each hold {K} values")
    if not np.all(np.isfinite(mat)):
        raise ModelError("embedding file has non-finite values")
    return mat


def write_embeddings(matrix, path: str | Path) -> None:
    mat = np.asarray(matrix, dtype=np.float64)
    lines = [f"{mat.shape[0]} {mat.shape[1]}"] + [" ".join(repr(float(v)) for v in row) for row in mat]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _finish(D: np.ndarray, metric: str) -> DistanceMatrix:
    D = 0.5 * (D + D.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(D, metric)


def cosine_distances(X) -> np.ndarray:
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    else:
        X = np.asarray(X, dtype=np.float64)
        norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ModelError(f"cosine distance undefined for all-zero row {int(zero[0])}")
    if sp.issparse(X):
        Xn = sp.diags(1.0 / norms) @ X
        G = np.asarray((Xn @ Xn.T).todense())
    else:
        Xn = X / norms[:, None]
        G = Xn @ Xn.T
    return np.clip(1.0 - G, 0.0, 2.0)


def jensen_shannon_distances(P) -> np.ndarray:
    """sqrt of the base-2 Jensen-Shannon divergence between all row pairs."""
    P = np.asarray(P, dtype=np.float64)
    if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-9):
        raise ModelError("jensen-shannon distance needs probability rows")
    m = P.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        logP = np.where(P > 0, np.log2(np.where(P > 0, P, 1.0)), 0.0)
        D = np.zeros((m, m))
        for i in range(m):
            M = 0.5 * (P[i] + P)
            logM = np.log2(np.where(M > 0, M, 1.0))
            kl_i = np.where(P[i] > 0, P[i] * (logP[i] - logM), 0.0).sum(axis=1)
            kl_j = np.where(P > 0, P * (logP - logM), 0.0).sum(axis=1)
            D[i] = 0.5 * (kl_i + kl_j)
    return np.sqrt(np.clip(D, 0.0, 1.0))


def euclidean_distances(X) -> np.ndarray:
    X = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    return squareform(pdist(X))


_DISTANCES = {
    "cosine": cosine_distances,
    "jensen-shannon": jensen_shannon_distances,
    "euclidean": euclidean_distances,
}


def pairwise_distances(rep, metric: str | None = None) -> DistanceMatrix:
    """All pairwise document distances under the representation's metric.

    ``rep`` may also be a plain matrix, in which case ``metric`` is required.
    """
    if isinstance(rep, DocumentRepresentation):
        X, metric = rep.matrix, metric or rep.metric
    else:
        X = rep
        if metric is None:
            raise ValueError("metric is required for a bare matrix")
    if metric not in _DISTANCES:
        raise ValueError(f"unknown metric {metric!r}")
    return _finish(_DISTANCES[metric](X), metric)
