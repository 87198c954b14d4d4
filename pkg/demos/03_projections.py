"""Project one corpus with every reduction method and save the layouts as SVG.

Run: python3 demos/03_projections.py [output-dir]
"""
import sys
import tempfile
from pathlib import Path

from spatbench import (
    DRParams,
    export_layout_svg,
    fit_representation,
    generate_synthetic_corpus,
    pairwise_distances,
    project,
    project_topics,
)

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="spatbench-"))
out.mkdir(parents=True, exist_ok=True)
corpus = generate_synthetic_corpus(k=3, docs_per_class=40, noise=0.15, seed=3)
rep = fit_representation(corpus, "VSM", tfidf=True)
D = pairwise_distances(rep)

settings = [
    DRParams("TSNE", perplexity=30, n_iter=1000, learning_rate="auto", seed=1),
    DRParams("UMAP", n_neighbors=15, min_dist=0.1, seed=1),
    DRParams("MDS", max_iter=300, seed=1),
    DRParams("SOM", grid_m=10, grid_n=10, epochs=10, seed=1),
]
for params in settings:
    # SOM trains on vectors; the other three only need distances.
    layout = project(rep if params.method == "SOM" else D, params)
    path = export_layout_svg(layout, corpus.labels, out / f"vsm_{params.method.lower()}.svg", title=params.method)
    print(f"{params.method:4s} -> {path}")

# Linear combination: project the K topics, then place each document at the
# theta-weighted mean of its topics' positions.
nmf = fit_representation(corpus, "NMF", 6, tfidf=True, seed=0)
layout = project_topics(nmf, DRParams("MDS", max_iter=300, seed=1))
print("topic positions:\n", layout.info["topic_positions"].round(2))
print("lincomb ->", export_layout_svg(layout, corpus.labels, out / "nmf_lincomb.svg", title="NMF lincomb"))
