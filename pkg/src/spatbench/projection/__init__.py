"""Two-dimensional projections of document representations."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import scipy.sparse as sp

from ..models import DistanceMatrix, DocumentRepresentation, pairwise_distances
from .base import DR_METHODS, DRParams, Layout, ProjectionError, read_layout_csv, write_layout_csv
from .mds import raw_stress, smacof
from .pca import pca_reduce
from .som import som_layout
from .tsne import calibrate_affinities, tsne
from .umap import fit_ab, umap

__all__ = [
    "DR_METHODS",
    "DRParams",
    "Layout",
    "ProjectionError",
    "calibrate_affinities",
    "fit_ab",
    "linear_combination_layout",
    "pca_reduce",
    "project",
    "project_topics",
    "raw_stress",
    "read_layout_csv",
    "smacof",
    "tsne",
    "umap",
    "write_layout_csv",
]

SOM_VARIANCE = 0.95


def _distances(data) -> np.ndarray:
    if isinstance(data, DistanceMatrix):
        return data.values
    if isinstance(data, DocumentRepresentation):
        return pairwise_distances(data).values
    return pairwise_distances(np.asarray(data, dtype=np.float64), "euclidean").values


def _vectors(data) -> np.ndarray:
    if isinstance(data, DistanceMatrix):
        raise ProjectionError("bad-input", "SOM needs vectors, not a distance matrix")
    if isinstance(data, DocumentRepresentation):
        X = data.dense()
        if data.metric == "cosine":
            norms = np.linalg.norm(X, axis=1)
            if np.any(norms == 0):
                raise ProjectionError("bad-input", "all-zero document vector under cosine metric")
            X = X / norms[:, None]
        return X
    return np.asarray(data.toarray() if sp.issparse(data) else data, dtype=np.float64)


def _n_points(data) -> int:
    return data.m if isinstance(data, DistanceMatrix) else data.shape[0]


def project(data, params: DRParams, config_ref: str = "") -> Layout:
    """Project documents (or topics) to 2-D.

    Parameters
    ----------
    data : DocumentRepresentation, DistanceMatrix or array
        t-SNE, UMAP and MDS work on pairwise distances, computed with the
        representation's own metric when not given directly. A bare array is
        treated as Euclidean vectors. SOM needs vectors; it first reduces them
        with :func:`pca_reduce` to 95% of the variance (cosine
        representations are L2-normalized beforehand).
    params : DRParams
    """
    m = _n_points(data)
    if m < 4:
        raise ProjectionError("too-few-points", f"need at least 4 points, got {m}")
    method = params.method
    if method == "SOM":
        X = pca_reduce(_vectors(data), SOM_VARIANCE)
        Y, info = som_layout(X, params.grid_m, params.grid_n, params.epochs, params.seed)
        info["pca_dims"] = X.shape[1]
        return Layout(Y, config_ref, info)

    D = _distances(data)
    if not np.any(D > 0):
        raise ProjectionError("zero-variance", "all pairwise distances are zero")
    if method == "TSNE":
        lr = params.learning_rate
        lr = max(m / 48.0, 50.0) if lr == "auto" else float(lr)
        Y, info = tsne(D, params.perplexity, params.n_iter, lr, params.seed)
        info["learning_rate"] = lr
    elif method == "UMAP":
        Y, info = umap(D, params.n_neighbors, params.min_dist, params.epochs, params.seed)
    else:
        Y, info = smacof(D, params.max_iter, params.seed)
    return Layout(Y, config_ref, info)


def linear_combination_layout(topic_layout, theta, config_ref: str = "") -> Layout:
    """Place each document at the ``theta``-weighted mean of the topic positions.

    Rows of ``theta`` are renormalized to sum to one.
    """
    phi = topic_layout.positions if isinstance(topic_layout, Layout) else np.asarray(topic_layout, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[1] != phi.shape[0]:
        raise ValueError(f"theta must have {phi.shape[0]} columns")
    if np.any(theta < 0):
        raise ValueError("theta must be non-negative")
    sums = theta.sum(axis=1)
    bad = np.flatnonzero(sums <= 0)
    if bad.size:
        raise ProjectionError("zero-topic-weights", f"all-zero theta row {int(bad[0])}")
    theta = theta / sums[:, None]
    return Layout(theta @ phi, config_ref, {"topic_positions": phi})


def topic_params(params: DRParams, n_topics: int) -> DRParams:
    """Adapt document-scale hyperparameters to a projection of ``n_topics`` points."""
    if params.method == "TSNE":
        perp = max(2.0, min(float(params.perplexity), float((n_topics - 1) // 3)))
        if not perp < n_topics - 1:
            raise ProjectionError(
                "perplexity-infeasible", f"{n_topics} topics admit no valid perplexity"
            )
        return replace(params, perplexity=perp)
    if params.method == "UMAP":
        return replace(params, n_neighbors=min(params.n_neighbors, n_topics))
    return params


def project_topics(rep: DocumentRepresentation, params: DRParams, config_ref: str = "") -> Layout:
    """Project the topics of ``rep`` and place documents by linear combination."""
    topics = rep.topics()
    K = topics.shape[0]
    topic_layout = project(topics, topic_params(params, K), config_ref)
    layout = linear_combination_layout(topic_layout, rep.topic_weights(), config_ref)
    layout.info.update({"topic_" + k: v for k, v in topic_layout.info.items()})
    return layout
