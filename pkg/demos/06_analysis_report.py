"""Turn a results table into the analysis bundle: correlations, sign tests,
best layouts, summaries and default-hyperparameter percentiles.

Run: python3 demos/06_analysis_report.py [output-dir]
"""
import sys
import tempfile
from pathlib import Path

from spatbench import (
    best_results,
    expand_grid,
    generate_synthetic_corpus,
    metric_correlations,
    paired_sign_test,
    run_benchmark,
)
from spatbench.analysis import add_aggregates, sign_test, write_report

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="spatbench-"))
corpus = generate_synthetic_corpus(k=3, docs_per_class=30, noise=0.15, seed=8, name="blobs")
grid = {"MDS": {"max_iter": [50, 100, 200, 300]}, "UMAP": {"n_neighbors": [5, 10, 15], "min_dist": [0.1, 0.5]}}
configs = expand_grid(["blobs"], ["VSM", "LSI", "NMF"], drs=list(grid), dr_grid=grid, n_topics=6,
                      include_defaults=True)
df = add_aggregates(run_benchmark({"blobs": corpus}, configs, out / "analysis_results.csv", parallelism=2))

corr, groups = metric_correlations(df)
print("metric groups with |r| >= 0.8:", groups)

tests = paired_sign_test(df, "tfidf", "alpha")
total = tests.iloc[-1]
print(f"tf-idf on vs off: better in {total.k} of {total.n} pairs, p = {total.p_value:.3g},"
      f" 0.99 lower bound {total.conf_lower:.2f}")
print("for comparison, 10936 wins of 14172 gives p = %.1g, bound %.2f" % sign_test(14172, 10936))

print(best_results(df, "alpha").to_string(index=False))
paths = write_report(df, out / "report")
for name, path in paths.items():
    print(f"{name:20s} {path}")
