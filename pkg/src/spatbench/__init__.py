"""Benchmarking of text spatializations: topic models, 2-D projections and layout quality."""
from .analysis import (
    aggregate_alpha,
    aggregate_beta,
    best_results,
    default_percentile,
    export_layout_svg,
    five_number_summary,
    metric_correlations,
    normalize_group_metrics,
    paired_sign_test,
)
from .corpus import Corpus, PreprocessConfig, generate_synthetic_corpus, load_corpus, preprocess, tfidf_weight
from .models import DistanceMatrix, DocumentRepresentation, fit_representation, pairwise_distances
from .projection import DRParams, Layout, linear_combination_layout, project, project_topics
from .quality import MetricVector, evaluate_layout
from .runner import LayoutConfig, encode_config_id, expand_grid, load_results, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "Corpus", "DRParams", "DistanceMatrix", "DocumentRepresentation", "Layout", "LayoutConfig",
    "MetricVector", "PreprocessConfig", "aggregate_alpha", "aggregate_beta", "best_results",
    "default_percentile", "encode_config_id", "evaluate_layout", "expand_grid", "export_layout_svg",
    "fit_representation", "five_number_summary", "generate_synthetic_corpus", "linear_combination_layout",
    "load_corpus", "load_results", "metric_correlations", "normalize_group_metrics", "paired_sign_test",
    "pairwise_distances", "preprocess", "project", "project_topics", "run_benchmark", "tfidf_weight",
]
