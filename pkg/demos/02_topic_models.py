"""Four ways to represent documents, and the distances that come with them.

Run: python3 demos/02_topic_models.py
"""
import numpy as np

from spatbench import fit_representation, generate_synthetic_corpus, pairwise_distances

corpus = generate_synthetic_corpus(k=3, docs_per_class=30, noise=0.1, seed=2)
codes = corpus.label_codes()


def separation(D):
    """Mean between-class distance over mean within-class distance."""
    same = codes[:, None] == codes[None, :]
    off = ~np.eye(len(codes), dtype=bool)
    return D[~same].mean() / D[same & off].mean()


for method, K, tfidf, extra in (
    ("VSM", None, True, {}),
    ("LSI", 3, True, {}),
    ("NMF", 3, True, {}),
    ("LDA", 3, False, {"gibbs_iters": 200}),
):
    rep = fit_representation(corpus, method, K, tfidf=tfidf, seed=0, **extra)
    D = pairwise_distances(rep).values
    print(f"{method:4s} {rep.metric:15s} shape {rep.shape}  between/within distance ratio {separation(D):.2f}")

# Topic-term matrices are what the linear-combination layouts project.
lda = fit_representation(corpus, "LDA", 3, seed=0, gibbs_iters=200)
for t, row in enumerate(lda.topic_term):
    top = np.argsort(row)[::-1][:4]
    print(f"LDA topic {t}: " + ", ".join(corpus.vocabulary[i] for i in top))
