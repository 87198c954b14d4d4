import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from spatbench.models import DistanceMatrix, DocumentRepresentation, pairwise_distances
from spatbench.projection import (
    DRParams,
    Layout,
    ProjectionError,
    calibrate_affinities,
    fit_ab,
    linear_combination_layout,
    pca_reduce,
    project,
    project_topics,
    raw_stress,
    read_layout_csv,
    smacof,
    tsne,
    umap,
    write_layout_csv,
)
from spatbench.projection.base import DR_METHODS
from spatbench.projection.som import best_matching_units
from spatbench.projection.umap import fuzzy_graph, knn_from_distances, smooth_knn


def blobs(n_per=20, dim=5, sep=20.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_per, dim)), rng.normal(0, 1, (n_per, dim)) + sep / np.sqrt(dim)])
    return X, np.repeat([0, 1], n_per)


def one_nn_agreement(Y, y):
    D = oracles.dist_matrix(Y)
    return np.mean([y[oracles.sorted_neighbors(D, i)[0]] == y[i] for i in range(len(y))])


# --- parameters and layouts --------------------------------------------------------


def test_drparams_normalization_and_validation():
    assert DRParams("t-SNE", perplexity=5, n_iter=10, learning_rate=100).method == "TSNE"
    assert set(DR_METHODS) == {"TSNE", "UMAP", "MDS", "SOM"}
    bad = [
        dict(method="TSNE", perplexity=1, n_iter=10, learning_rate=10),
        dict(method="TSNE", perplexity=5, n_iter=0, learning_rate=10),
        dict(method="TSNE", perplexity=5, n_iter=10, learning_rate=-1),
        dict(method="UMAP", n_neighbors=1, min_dist=0.1),
        dict(method="UMAP", n_neighbors=5, min_dist=-0.1),
        dict(method="MDS", max_iter=0),
        dict(method="SOM", grid_m=1, grid_n=4, epochs=1),
        dict(method="SOM", grid_m=2, grid_n=2, epochs=0),
        dict(method="PCA"),
    ]
    for kw in bad:
        with pytest.raises(ValueError):
            DRParams(**kw)


def test_layout_invariants():
    with pytest.raises(ValueError):
        Layout(np.array([[0.0, np.nan]]))
    with pytest.raises(ValueError):
        Layout(np.zeros((3, 3)))
    assert Layout(np.ones((3, 2))).degenerate
    assert not Layout(np.eye(2)).degenerate


def test_layout_csv_roundtrip(tmp_path):
    Y = np.random.default_rng(0).normal(size=(5, 2)) * 1e3
    path = write_layout_csv(Layout(Y), [f"d{i}" for i in range(5)], list("aabbb"), tmp_path / "l.csv")
    assert path.read_text().splitlines()[0] == "doc_id,x,y,label"
    back, ids, labels = read_layout_csv(path)
    assert np.array_equal(back.positions, Y)
    assert ids[0] == "d0" and labels == list("aabbb")


def test_too_few_points():
    with pytest.raises(ProjectionError) as exc:
        project(np.eye(3), DRParams.mds())
    assert exc.value.reason == "too-few-points"


def test_zero_variance():
    for params in (DRParams.mds(), DRParams.tsne(2, 10, 10), DRParams.umap(2, 0.1), DRParams.som(2, 2, 1)):
        with pytest.raises(ProjectionError) as exc:
            project(np.ones((6, 3)), params)
        assert exc.value.reason == "zero-variance"


# --- MDS ---------------------------------------------------------------------------


def test_mds_recovers_triangle():
    D = np.array([[0, 3, 4], [3, 0, 5], [4, 5, 0]], dtype=float)
    Y, info = smacof(D, max_iter=3000, seed=0)
    L = oracles.dist_matrix(Y)
    for (i, j), d in {(0, 1): 3, (0, 2): 4, (1, 2): 5}.items():
        assert L[i][j] == pytest.approx(d, abs=1e-3)


@given(st.integers(0, 10_000))
def test_smacof_stress_monotone(seed):
    rng = np.random.default_rng(seed)
    D = pairwise_distances(rng.normal(size=(15, 4)), "euclidean").values
    _, info = smacof(D, max_iter=100, seed=seed)
    s = info["stress"]
    assert np.all(np.diff(s) <= 1e-10 * s[:-1])


def test_raw_stress_matches_oracle():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(7, 2))
    D = pairwise_distances(rng.normal(size=(7, 3)), "euclidean").values
    assert raw_stress(X, D) == pytest.approx(oracles.raw_stress(X, D.tolist()), rel=1e-12)


def test_mds_stops_on_tolerance():
    X = np.random.default_rng(3).normal(size=(10, 2))
    D = pairwise_distances(X, "euclidean").values
    _, info = smacof(D, max_iter=5000, seed=0)
    assert info["n_iter"] < 5000
    assert len(info["stress"]) == info["n_iter"] + 1


# --- SOM and PCA -------------------------------------------------------------------


def test_som_positions_are_grid_cells():
    X, _ = blobs()
    layout = project(X, DRParams.som(2, 2, 3, seed=1))
    assert set(map(tuple, layout.positions)) <= {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}


def test_som_grid_orientation():
    X, _ = blobs()
    layout = project(X, DRParams.som(3, 5, 2))
    assert layout.positions[:, 0].max() <= 2 and layout.positions[:, 1].max() <= 4


def test_som_bmu_ties_lowest_index():
    W = np.array([[0.0, 1.0], [0.0, -1.0], [5.0, 5.0]])
    assert best_matching_units(np.array([[0.0, 0.0]]), W).tolist() == [0]


def test_som_rejects_distance_matrix():
    D = DistanceMatrix(np.ones((4, 4)) - np.eye(4))
    with pytest.raises(ProjectionError):
        project(D, DRParams.som(2, 2, 1))


def test_som_normalizes_cosine_vectors():
    X, _ = blobs(seed=2)
    X = np.abs(X) + 0.1
    a = project(DocumentRepresentation(X, "cosine", "EXT"), DRParams.som(4, 4, 2))
    b = project(DocumentRepresentation(X * 7.0, "cosine", "EXT"), DRParams.som(4, 4, 2))
    assert np.array_equal(a.positions, b.positions)


def test_pca_plane_in_5d():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 2)) @ rng.normal(size=(2, 5))
    assert pca_reduce(X, 0.95).shape == (30, 2)


def test_pca_full_retention():
    X = np.random.default_rng(1).normal(size=(6, 4))
    assert pca_reduce(X, 1.0).shape[1] == min(6 - 1, 4)
    X = np.random.default_rng(1).normal(size=(20, 4))
    assert pca_reduce(X, 1.0).shape[1] == 4


def test_pca_isotropic():
    X = np.random.default_rng(2).normal(size=(2000, 3))
    assert pca_reduce(X, 0.95).shape[1] == 3


def test_pca_scores_and_signs():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(25, 4)) * [5.0, 3.0, 1.0, 0.2]
    Z = pca_reduce(X, 1.0)
    var = Z.var(axis=0)
    assert np.all(np.diff(var) <= 1e-12)
    np.testing.assert_allclose(Z.T @ Z, np.diag(np.diag(Z.T @ Z)), atol=1e-8)
    assert np.array_equal(pca_reduce(X, 1.0), pca_reduce(X.copy(), 1.0))
    with pytest.raises(ProjectionError):
        pca_reduce(np.ones((5, 3)))


# --- t-SNE -------------------------------------------------------------------------


def test_tsne_separates_blobs():
    X, y = blobs()
    layout = project(X, DRParams.tsne(5, 500, 200.0, seed=3))
    assert one_nn_agreement(layout.positions, y) == 1.0


def test_tsne_calibration_and_kl():
    X = np.random.default_rng(5).normal(size=(100, 5))
    D = pairwise_distances(X, "euclidean").values
    perp = 20.0
    Pc, achieved = calibrate_affinities(D**2, perp)
    for row in Pc:
        assert abs(oracles.row_perplexity(row) - perp) <= 1e-4 * perp
    assert np.allclose(Pc.sum(axis=1), 1.0) and np.all(np.diag(Pc) == 0)
    _, info = tsne(D, perp, 300, 100.0, seed=0)
    assert info["kl"][-1] < info["kl"][info["n_exaggeration"]]
    assert len(info["kl"]) == 301 and info["n_exaggeration"] == 75


@given(st.integers(0, 1000), st.randoms(use_true_random=False))
def test_calibration_permutation_equivariant(seed, rnd):
    X = np.random.default_rng(seed).normal(size=(12, 3))
    D2 = pairwise_distances(X, "euclidean").values ** 2
    perm = list(range(12))
    rnd.shuffle(perm)
    P, _ = calibrate_affinities(D2, 4.0)
    Pp, _ = calibrate_affinities(D2[np.ix_(perm, perm)], 4.0)
    np.testing.assert_allclose(Pp, P[np.ix_(perm, perm)], atol=1e-12)


@pytest.mark.parametrize("perp", [1.5, 9.0, 20.0])
def test_tsne_infeasible_perplexity(perp):
    X = np.random.default_rng(0).normal(size=(10, 3))
    with pytest.raises(ProjectionError) as exc:
        tsne(pairwise_distances(X, "euclidean").values, perp, 10, 10.0)
    assert exc.value.reason == "perplexity-infeasible"


def test_tsne_auto_learning_rate():
    X, _ = blobs()
    layout = project(X, DRParams.tsne(5, 20, "auto"))
    assert layout.info["learning_rate"] == 50.0


# --- UMAP --------------------------------------------------------------------------


def test_umap_curve_fit():
    for md in (0.0, 0.1, 0.5, 1.0):
        a, b = fit_ab(md)
        x = np.linspace(0, 3, 300)
        target = np.where(x < md, 1.0, np.exp(-(x - md)))
        assert np.sqrt(np.mean((1 / (1 + a * x ** (2 * b)) - target) ** 2)) < 0.05
    a, b = fit_ab(0.1)
    assert a == pytest.approx(1.58, abs=0.05) and b == pytest.approx(0.90, abs=0.03)


def test_umap_bandwidths_hit_target():
    X = np.random.default_rng(0).normal(size=(40, 4))
    D = pairwise_distances(X, "euclidean").values
    idx, dist = knn_from_distances(D, 10)
    assert np.all(idx[:, 0] == np.arange(40))
    rho, sigma = smooth_knn(dist)
    sums = np.exp(-np.maximum(dist[:, 1:] - rho[:, None], 0) / sigma[:, None]).sum(axis=1)
    np.testing.assert_allclose(sums, np.log2(10), atol=1e-5)


def test_umap_fuzzy_union_symmetric():
    X = np.random.default_rng(1).normal(size=(30, 3))
    G = fuzzy_graph(pairwise_distances(X, "euclidean").values, 6).toarray()
    np.testing.assert_allclose(G, G.T, atol=1e-15)
    assert G.max() <= 1.0 and G.min() >= 0.0 and np.all(np.diag(G) == 0)


def test_umap_separates_blobs():
    X, y = blobs(seed=1)
    layout = project(X, DRParams.umap(10, 0.1, epochs=200, seed=2))
    assert one_nn_agreement(layout.positions, y) == 1.0


def test_umap_rejects_small_k():
    with pytest.raises(ProjectionError):
        umap(np.ones((5, 5)) - np.eye(5), 1, 0.1)


# --- determinism -------------------------------------------------------------------


@pytest.mark.parametrize(
    "params",
    [DRParams.tsne(5, 60, 100.0, seed=9), DRParams.umap(8, 0.2, 50, seed=9), DRParams.mds(50, seed=9),
     DRParams.som(3, 3, 2, seed=9)],
)
def test_projection_deterministic(params):
    X, _ = blobs(seed=4)
    a = project(X, params)
    b = project(X, params)
    assert a.positions.tobytes() == b.positions.tobytes()
    c = project(X, params.with_seed(10))
    assert not np.array_equal(a.positions, c.positions) or params.method == "SOM"


# --- linear combination ------------------------------------------------------------


def test_lincomb_examples():
    assert np.array_equal(linear_combination_layout(np.array([[2.0, -1.0]]), np.ones((3, 1))).positions,
                          np.tile([2.0, -1.0], (3, 1)))
    pos = linear_combination_layout(np.array([[0.0, 0.0], [2.0, 2.0]]), np.array([[0.5, 0.5]])).positions
    assert pos.tolist() == [[1.0, 1.0]]
    pos = linear_combination_layout(np.array([[0.0, 0.0], [4.0, 0.0]]), np.array([[0.25, 0.75]])).positions
    assert pos.tolist() == [[3.0, 0.0]]


def test_lincomb_errors():
    with pytest.raises(ProjectionError):
        linear_combination_layout(np.eye(2), np.array([[0.0, 0.0]]))
    with pytest.raises(ValueError):
        linear_combination_layout(np.eye(2), np.array([[-1.0, 2.0]]))
    with pytest.raises(ValueError):
        linear_combination_layout(np.eye(2), np.ones((2, 3)))


@given(
    arrays(np.float64, (4, 2), elements=st.floats(-10, 10)),
    arrays(np.float64, (6, 4), elements=st.floats(0, 5)),
    st.permutations(range(4)),
)
def test_lincomb_hull_and_permutation(phi, theta, perm):
    theta[:, 0] += 0.1
    pos = linear_combination_layout(phi, theta).positions
    assert np.all(pos >= phi.min(axis=0) - 1e-9) and np.all(pos <= phi.max(axis=0) + 1e-9)
    perm = list(perm)
    again = linear_combination_layout(phi[perm], theta[:, perm]).positions
    np.testing.assert_allclose(again, pos, atol=1e-9)


def test_project_topics_paths():
    rng = np.random.default_rng(0)
    theta = rng.dirichlet(np.ones(8), size=30)
    phi = rng.dirichlet(np.ones(20), size=8)
    rep = DocumentRepresentation(theta, "jensen-shannon", "LDA", phi)
    for params in (DRParams.tsne(30, 50, 10.0), DRParams.umap(15, 0.1, 30), DRParams.mds(50), DRParams.som(3, 3, 2)):
        layout = project_topics(rep, params)
        topic_pos = layout.info["topic_positions"]
        assert topic_pos.shape == (8, 2)
        np.testing.assert_allclose(layout.positions, theta @ topic_pos, atol=1e-12)


def test_topic_tsne_needs_enough_topics():
    phi = np.array([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]])
    rep = DocumentRepresentation(np.full((5, 3), 1 / 3), "jensen-shannon", "LDA", phi)
    with pytest.raises(ProjectionError) as exc:
        project_topics(rep, DRParams.tsne())
    assert exc.value.reason == "perplexity-infeasible"
