"""From raw text to a document-term matrix, then to tf-idf weights.

Run: python3 demos/01_corpus_and_tfidf.py
"""
import numpy as np

from spatbench import PreprocessConfig, generate_synthetic_corpus, preprocess, tfidf_weight

docs = [
    ("d1", "space", "The rocket launched toward the orbiting station."),
    ("d2", "space", "Astronauts docked with the station after launch."),
    ("d3", "food", "Simmer the onions, then season the sauce."),
    ("d4", "food", "A slow simmer keeps the sauce rich."),
]

# Stopwords go, tokens are lowercased, and "launched"/"launch" merge once
# suffix stripping is on.
corpus = preprocess(docs, PreprocessConfig(strip_suffixes=True), name="tiny")
print(f"{corpus.m} documents x {corpus.n} terms, classes {sorted(set(corpus.labels))}")
print("vocabulary:", " ".join(corpus.vocabulary))

dense = corpus.dtm.toarray()
weights = tfidf_weight(corpus).toarray()
shared = corpus.vocabulary.index("station")
print(f"'station' appears in {np.count_nonzero(dense[:, shared])} of {corpus.m} docs,"
      f" so its idf is ln(4/2) = {np.log(2):.3f}")
print("tf-idf row d1:", np.round(weights[0][weights[0] > 0], 3))

# Synthetic corpora give labeled data of any size without external downloads.
synth = generate_synthetic_corpus(k=3, docs_per_class=40, noise=0.1, seed=1)
print(f"synthetic: {synth.m} docs, {synth.n} terms, {synth.k} classes,"
      f" density {synth.dtm.nnz / (synth.m * synth.n):.2f}")
