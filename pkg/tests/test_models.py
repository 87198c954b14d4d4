import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from spatbench.corpus import generate_synthetic_corpus, tfidf_weight
from spatbench.models import (
    DistanceMatrix,
    DocumentRepresentation,
    ModelError,
    fit_representation,
    lda_gibbs,
    nmf,
    pairwise_distances,
    read_embeddings,
    write_embeddings,
)

positive_rows = arrays(
    np.float64,
    st.tuples(st.integers(2, 7), st.integers(2, 5)),
    elements=st.floats(0.05, 10.0, allow_nan=False),
)


def test_vsm_passthrough(synth3):
    rep = fit_representation(synth3, "VSM")
    assert rep.metric == "cosine" and rep.shape == (synth3.m, synth3.n)
    assert (rep.matrix != synth3.dtm).nnz == 0
    weighted = fit_representation(synth3, "VSM", tfidf=True)
    assert (weighted.matrix != tfidf_weight(synth3)).nnz == 0
    assert weighted.tfidf_applied is True


def test_lsi_identity():
    rep = fit_representation(np.eye(2), "LSI", 2)
    D = pairwise_distances(rep).values
    assert D[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert abs(rep.matrix[0] @ rep.matrix[1]) < 1e-12


def test_lsi_sign_convention_and_shapes(synth3):
    rep = fit_representation(synth3, "LSI", 4, tfidf=True)
    assert rep.matrix.shape == (synth3.m, 4) and rep.topic_term.shape == (4, synth3.n)
    V = rep.topic_term
    idx = np.abs(V).argmax(axis=1)
    assert np.all(V[np.arange(4), idx] > 0)
    np.testing.assert_allclose(V @ V.T, np.eye(4), atol=1e-10)


@given(positive_rows)
def test_lsi_full_rank_preserves_cosine(A):
    K = np.linalg.matrix_rank(A)
    rep = fit_representation(A, "LSI", K)
    np.testing.assert_allclose(
        pairwise_distances(rep).values, pairwise_distances(A, "cosine").values, atol=1e-8
    )


def test_topic_count_range(synth3):
    for method in ("LSI", "NMF", "LDA"):
        with pytest.raises(ModelError):
            fit_representation(synth3, method, 0)
        with pytest.raises(ModelError):
            fit_representation(synth3, method, synth3.n + 1)


def test_nmf_monotone_and_nonnegative(synth3):
    rep = fit_representation(synth3, "NMF", 6, tfidf=True, seed=2, max_iter=150, tol=0)
    trace = rep.info["objective"]
    assert len(trace) == 151
    assert np.all(np.diff(trace) <= 1e-10 * trace[:-1])
    assert rep.matrix.min() >= 0 and rep.topic_term.min() >= 0


@given(st.integers(0, 10_000))
def test_nmf_monotone_random(seed):
    A = np.random.default_rng(seed).random((12, 9))
    _, _, trace = nmf(A, 3, seed=seed, max_iter=60, tol=0)
    assert np.all(np.diff(trace) <= 1e-10 * np.maximum(trace[:-1], 1.0))


def test_nmf_sparse_and_dense_agree(synth3):
    W1, H1, t1 = nmf(synth3.dtm, 3, seed=1, max_iter=20, tol=0)
    W2, H2, t2 = nmf(synth3.dtm.toarray(), 3, seed=1, max_iter=20, tol=0)
    np.testing.assert_allclose(W1, W2, rtol=1e-10)
    np.testing.assert_allclose(t1, t2, rtol=1e-10)


def test_nmf_rejects_negative_input():
    with pytest.raises(ModelError):
        nmf(np.array([[1.0, -1.0], [0.5, 1.0]]), 1)


def test_fits_are_deterministic(synth3):
    for method, kw in (("LSI", {}), ("NMF", {}), ("LDA", {"gibbs_iters": 20})):
        a = fit_representation(synth3, method, 3, seed=5, **kw)
        b = fit_representation(synth3, method, 3, seed=5, **kw)
        assert a.dense().tobytes() == b.dense().tobytes()


def test_lda_dominant_topics_follow_classes():
    c = generate_synthetic_corpus(k=2, docs_per_class=30, noise=0.0, seed=11)
    rep = fit_representation(c, "LDA", 2, seed=3, gibbs_iters=200)
    dominant = rep.matrix.argmax(axis=1)
    codes = c.label_codes()
    majority = [np.bincount(dominant[codes == cls], minlength=2).argmax() for cls in (0, 1)]
    assert majority[0] != majority[1]
    agree = np.mean([dominant[i] == majority[codes[i]] for i in range(c.m)])
    assert agree >= 0.9


def test_lda_rows_are_distributions(synth3):
    a = fit_representation(synth3, "LDA", 3, seed=1, gibbs_iters=30)
    b = fit_representation(synth3, "LDA", 3, seed=2, gibbs_iters=30)
    for rep in (a, b):
        assert rep.metric == "jensen-shannon"
        np.testing.assert_allclose(rep.matrix.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(rep.topic_term.sum(axis=1), 1.0, atol=1e-9)
        assert rep.matrix.min() > 0
    assert not np.array_equal(a.matrix, b.matrix)


def test_lda_defaults_and_priors():
    theta, phi = lda_gibbs(sp.csr_matrix(np.array([[3, 0], [0, 2]])), 2, alpha=0.5, beta=0.1, n_iter=5)
    assert theta.shape == (2, 2) and phi.shape == (2, 2)
    with pytest.raises(ModelError):
        lda_gibbs(np.eye(2), 2, alpha=0.0, beta=0.1)


def test_lda_rejects_weighted_input(synth3):
    with pytest.raises(ModelError):
        fit_representation(synth3, "LDA", 2, tfidf=True)
    with pytest.raises(ModelError):
        fit_representation(np.array([[0.5, 1.0], [1.0, 2.0]]), "LDA", 1)


def test_ext_embeddings(tmp_path, synth3):
    emb = np.random.default_rng(0).normal(size=(synth3.m, 4))
    write_embeddings(emb, tmp_path / "e.txt")
    assert np.array_equal(read_embeddings(tmp_path / "e.txt"), emb)
    rep = fit_representation(synth3, "EXT", embeddings=tmp_path / "e.txt")
    assert rep.metric == "cosine" and rep.topic_term is None
    with pytest.raises(ModelError):
        fit_representation(synth3, "EXT", embeddings=emb[:-1])
    with pytest.raises(ModelError):
        fit_representation(synth3, "EXT", embeddings=emb, tfidf=True)
    with pytest.raises(ModelError):
        fit_representation(synth3, "EXT")


@pytest.mark.parametrize("text", ["", "2 2\n1 2\n", "x y\n", "1 2\n1 a\n", "1 2\n1 2 3\n", "1 1\nnan\n"])
def test_malformed_embedding_files(tmp_path, text):
    (tmp_path / "e.txt").write_text(text)
    with pytest.raises(ModelError):
        read_embeddings(tmp_path / "e.txt")


def test_representation_invariants():
    with pytest.raises(ValueError):
        DocumentRepresentation(np.eye(2), "cosine", "LSI")
    with pytest.raises(ValueError):
        DocumentRepresentation(np.eye(2), "cosine", "VSM", topic_term=np.eye(2))
    with pytest.raises(ValueError):
        DocumentRepresentation(np.eye(2), "manhattan", "VSM")


def test_lsi_topic_weights_use_magnitudes():
    rep = DocumentRepresentation(np.array([[-1.0, 3.0], [2.0, -2.0]]), "cosine", "LSI", np.eye(2))
    np.testing.assert_allclose(rep.topic_weights(), [[0.25, 0.75], [0.5, 0.5]])
    with pytest.raises(ModelError):
        DocumentRepresentation(np.zeros((1, 2)), "cosine", "NMF", np.eye(2)).topic_weights()


# --- distances ---------------------------------------------------------------------


@pytest.mark.parametrize("metric", ["cosine", "euclidean", "jensen-shannon"])
def test_identical_rows_zero(metric):
    X = np.array([[0.2, 0.3, 0.5], [0.2, 0.3, 0.5], [0.6, 0.2, 0.2]])
    D = pairwise_distances(X, metric).values
    assert D[0, 1] == pytest.approx(0.0, abs=1e-15)


def test_orthogonal_and_disjoint():
    assert pairwise_distances(np.eye(3), "cosine").values[0, 1] == 1.0
    P = np.array([[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.3, 0.7]])
    assert pairwise_distances(P, "jensen-shannon").values[0, 1] == pytest.approx(1.0, abs=1e-15)


def test_zero_row_reports_index():
    with pytest.raises(ModelError, match="row 1"):
        pairwise_distances(np.array([[1.0, 0.0], [0.0, 0.0]]), "cosine")
    with pytest.raises(ModelError, match="row 1"):
        pairwise_distances(sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]])), "cosine")


def test_js_needs_distributions():
    with pytest.raises(ModelError):
        pairwise_distances(np.array([[0.5, 0.6], [1.0, 0.0]]), "jensen-shannon")


@given(positive_rows)
def test_distances_match_oracle(X):
    cos = pairwise_distances(X, "cosine").values
    P = X / X.sum(axis=1, keepdims=True)
    js = pairwise_distances(P, "jensen-shannon").values
    m = len(X)
    for i in range(m):
        for j in range(m):
            if i != j:
                assert cos[i, j] == pytest.approx(max(0.0, oracles.cosine_distance(X[i], X[j])), abs=1e-12)
                assert js[i, j] == pytest.approx(oracles.js_distance(P[i], P[j]), abs=1e-7)
    assert js.max() <= 1.0


@given(positive_rows, st.randoms(use_true_random=False))
def test_distances_permutation_equivariant(X, rnd):
    perm = list(range(len(X)))
    rnd.shuffle(perm)
    for metric in ("cosine", "euclidean"):
        D = pairwise_distances(X, metric).values
        Dp = pairwise_distances(X[perm], metric).values
        np.testing.assert_allclose(Dp, D[np.ix_(perm, perm)], atol=1e-12)


def test_sparse_and_dense_cosine_agree(synth3):
    np.testing.assert_allclose(
        pairwise_distances(synth3.dtm, "cosine").values,
        pairwise_distances(synth3.dtm.toarray(), "cosine").values,
        atol=1e-12,
    )


@pytest.mark.parametrize(
    "values",
    [np.ones((2, 3)), np.array([[0.0, -1.0], [-1.0, 0.0]]), np.array([[1.0, 1.0], [1.0, 0.0]]),
     np.array([[0.0, 1.0], [2.0, 0.0]]), np.array([[0.0, np.inf], [np.inf, 0.0]])],
)
def test_distance_matrix_invariants(values):
    with pytest.raises(ValueError):
        DistanceMatrix(values)
