"""What the eight layout-quality metrics say about a good and a scrambled layout.

Run: python3 demos/04_quality_metrics.py
"""
import numpy as np

from spatbench import DRParams, aggregate_alpha, evaluate_layout, generate_synthetic_corpus, project
from spatbench.models import fit_representation, pairwise_distances

corpus = generate_synthetic_corpus(k=3, docs_per_class=40, noise=0.1, seed=4)
D = pairwise_distances(fit_representation(corpus, "VSM", tfidf=True))
good = project(D, DRParams("TSNE", perplexity=30, n_iter=1000, learning_rate="auto", seed=0)).positions
scrambled = good[np.random.default_rng(0).permutation(corpus.m)]

print(f"{'metric':12s} {'t-SNE':>8s} {'shuffled':>9s}")
scores = {}
for name, Y in (("t-SNE", good), ("shuffled", scrambled)):
    scores[name] = evaluate_layout(D, Y, corpus.labels).as_dict()
for key in ("trust", "cont", "shepard", "nh", "dsc", "silhouette", "ch_raw", "db_raw"):
    print(f"{key:12s} {scores['t-SNE'][key]:8.3f} {scores['shuffled'][key]:9.3f}")

for name, s in scores.items():
    print(f"alpha({name}) = {aggregate_alpha(s['trust'], s['cont'], s['shepard'], s['nh']):.3f}")
# CH and DB are unbounded, so beta only makes sense after normalizing within
# a group of layouts; see demos/06_analysis_report.py.
