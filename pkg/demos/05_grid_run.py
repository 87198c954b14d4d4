"""Run a small hyperparameter grid, interrupt it, and resume.

Run: python3 demos/05_grid_run.py [output-dir]
"""
import sys
import tempfile
from pathlib import Path

from spatbench import expand_grid, generate_synthetic_corpus, run_benchmark

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="spatbench-"))
corpora = {
    "blobs3": generate_synthetic_corpus(k=3, docs_per_class=25, noise=0.1, seed=5, name="blobs3"),
    "blobs4": generate_synthetic_corpus(k=4, docs_per_class=20, noise=0.2, seed=6, name="blobs4"),
}
grid = {
    "TSNE": {"perplexity": [5, 20], "n_iter": [250], "learning_rate": [250]},
    "UMAP": {"n_neighbors": [5, 15], "min_dist": [0.1, 0.5]},
    "MDS": {"max_iter": [100, 300]},
}
configs = expand_grid(list(corpora), ["VSM", "LSI", "NMF"], drs=list(grid), dr_grid=grid, n_topics=6)
print(f"{len(configs)} configurations")

results = out / "results.csv"
# Stop after the first 20 jobs, as if the process had been killed ...
run_benchmark(corpora, configs[:20], results, record_runtime=False)
print("after interruption:", sum(1 for _ in results.open()) - 1, "rows")
# ... then rerun the full list: finished rows are skipped.
df = run_benchmark(corpora, configs, results, parallelism=2, record_runtime=False)
print("after resume:", len(df), "rows,", dict(df.status.value_counts()))
print(df.groupby(["tm", "dr"])[["trust", "nh"]].mean().round(3))
print("results ->", results)
