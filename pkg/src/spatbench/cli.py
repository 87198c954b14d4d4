"""Command-line entry point: ``spatbench <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analysis
from .corpus import PreprocessConfig, generate_synthetic_corpus, load_corpus, read_dtm_files, write_dtm_files
from .models import read_embeddings
from .projection import DRParams, read_layout_csv, write_layout_csv
from .runner import (
    DEFAULT_HYPERPARAMS,
    FIXED_DR_PARAMS,
    FittedModel,
    LayoutConfig,
    compute_layout,
    derive_seed,
    encode_config_id,
    expand_grid,
    fit_models,
    heuristic_topic_count,
    run_benchmark,
)

log = logging.getLogger("spatbench")


def _named_paths(items):
    """``name=path`` or bare ``path`` (named after its directory)."""
    out = {}
    for item in items:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).name, item
        if name in out:
            raise SystemExit(f"duplicate dataset name {name!r}")
        out[name] = Path(path)
    return out


def _dr_params(args) -> DRParams:
    method = args.dr.upper().replace("-", "")
    values = {**FIXED_DR_PARAMS.get(method, {}), **DEFAULT_HYPERPARAMS.get(method, {})}
    if method == "SOM":
        values.update(grid_m=10, grid_n=10)
    for item in args.param or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise SystemExit(f"--param expects key=value, got {item!r}")
        try:
            values[key] = raw if raw == "auto" else json.loads(raw)
        except json.JSONDecodeError:
            raise SystemExit(f"bad value in --param {item!r}") from None
    try:
        return DRParams(method, seed=args.seed, **values)
    except (TypeError, ValueError) as exc:
        raise SystemExit(f"invalid DR parameters: {exc}") from None


def cmd_ingest(args):
    cfg = PreprocessConfig(
        min_df=args.min_df,
        max_df_fraction=args.max_df,
        min_token_length=args.min_length,
        strip_suffixes=args.strip_suffixes,
        **({"stopwords": frozenset()} if args.keep_stopwords else {}),
    )
    corpus = load_corpus(args.source, "label-directories", cfg, name=args.name)
    write_dtm_files(corpus, args.out)
    print(f"{corpus.name}: {corpus.m} documents, {corpus.n} terms, {corpus.k} classes -> {args.out}")


def cmd_synth(args):
    corpus = generate_synthetic_corpus(
        k=args.classes,
        docs_per_class=args.docs_per_class,
        terms_per_class=args.terms_per_class,
        noise=args.noise,
        seed=args.seed,
        doc_length=args.doc_length,
        name=Path(args.out).name,
    )
    write_dtm_files(corpus, args.out)
    print(f"{corpus.m} documents, {corpus.n} terms, {corpus.k} classes -> {args.out}")


def cmd_layout(args):
    corpus = read_dtm_files(args.corpus)
    tm = args.tm.upper()
    tfidf = "X" if tm in ("LDA", "EXT") else args.tfidf
    lincomb = "X" if tm in ("VSM", "EXT") else args.lincomb
    K = None
    if tm in ("LSI", "NMF", "LDA"):
        K = args.topics or heuristic_topic_count(corpus.k)
    cfg = LayoutConfig(corpus.name, tm, tfidf, _dr_params(args), lincomb, K)
    externals = {corpus.name: read_embeddings(args.embeddings)} if args.embeddings else None
    ctx = fit_models({corpus.name: corpus}, [cfg], args.seed, externals)
    fitted: FittedModel = ctx.fits[cfg.fit_key()]
    if fitted.error:
        raise SystemExit(fitted.error)
    layout = compute_layout(cfg, fitted)
    write_layout_csv(layout, corpus.doc_ids, corpus.labels, args.out)
    if args.svg:
        analysis.export_layout_svg(layout, corpus.labels, args.svg, title=encode_config_id(cfg))
    print(f"{encode_config_id(cfg)} -> {args.out}")


def cmd_grid(args):
    paths = _named_paths(args.datasets)
    corpora = {name: read_dtm_files(p, name=name) for name, p in paths.items()}
    if args.topics:
        n_topics = args.topics
    else:
        n_topics = {name: heuristic_topic_count(c.k) for name, c in corpora.items()}
    dr_grid = json.loads(Path(args.grid).read_text()) if args.grid else None
    externals = {n: read_embeddings(p) for n, p in _named_paths(args.embeddings or []).items()}
    configs = expand_grid(
        list(corpora),
        args.tms,
        drs=args.drs,
        dr_grid=dr_grid,
        n_topics=n_topics,
        reference_space=args.reference_space,
        global_seed=args.global_seed,
        include_defaults=args.with_defaults,
    )
    df = run_benchmark(
        corpora,
        configs,
        args.out,
        parallelism=args.parallelism,
        resume=args.resume,
        global_seed=args.global_seed,
        externals=externals,
        job_timeout=args.timeout,
        memory_limit_mb=args.memory_mb,
        record_runtime=not args.no_runtime,
    )
    counts = df["status"].value_counts().to_dict()
    print(f"{len(df)} rows in {args.out}: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))


def cmd_analyze(args):
    from .runner import load_results

    df = load_results(args.results)
    paths = analysis.write_report(df, args.out, threshold=args.threshold, method=args.method)
    for name, p in paths.items():
        print(f"{name}: {p}")


def cmd_plot(args):
    layout, _, labels = read_layout_csv(args.layout)
    analysis.export_layout_svg(layout, labels, args.out, title=args.title)
    print(args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spatbench", description="Benchmark document spatializations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="build DTM files from a label-directory tree")
    s.add_argument("source", help="directory with one subdirectory of text files per class")
    s.add_argument("out", help="output directory for matrix.txt, vocab.txt, labels.txt")
    s.add_argument("--name")
    s.add_argument("--min-df", type=int, default=1)
    s.add_argument("--max-df", type=float, default=1.0, help="maximum document frequency as a fraction")
    s.add_argument("--min-length", type=int, default=1, help="minimum token length")
    s.add_argument("--strip-suffixes", action="store_true")
    s.add_argument("--keep-stopwords", action="store_true")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", help="write a synthetic labeled corpus as DTM files")
    s.add_argument("out")
    s.add_argument("--classes", type=int, default=3)
    s.add_argument("--docs-per-class", type=int, default=50)
    s.add_argument("--terms-per-class", type=int, default=20)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--doc-length", type=int, default=60)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("layout", help="compute one layout and write it as CSV (and SVG)")
    s.add_argument("corpus", help="DTM-files directory")
    s.add_argument("--tm", default="VSM", choices=["VSM", "LSI", "NMF", "LDA", "EXT"], type=str.upper)
    s.add_argument("--tfidf", default="+", choices=["+", "-"])
    s.add_argument("--dr", default="TSNE", help="TSNE, UMAP, MDS or SOM")
    s.add_argument("--lincomb", default="-", choices=["+", "-"])
    s.add_argument("--topics", type=int, help="topic count (default: heuristic from class count)")
    s.add_argument("--param", action="append", metavar="KEY=VALUE", help="DR hyperparameter, repeatable")
    s.add_argument("--embeddings", help="embedding file for --tm EXT")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="layout CSV path")
    s.add_argument("--svg", help="also write an SVG scatter plot")
    s.set_defaults(func=cmd_layout)

    s = sub.add_parser("grid", help="expand a hyperparameter grid and run it")
    s.add_argument("--datasets", nargs="+", required=True, metavar="[NAME=]DIR")
    s.add_argument("--tms", nargs="+", default=["VSM", "LSI", "NMF", "LDA"], type=str.upper)
    s.add_argument("--drs", nargs="+", default=["TSNE", "UMAP", "SOM", "MDS"], type=str.upper)
    s.add_argument("--parallelism", type=int, default=1)
    s.add_argument("--global-seed", type=int, default=0)
    s.add_argument("--out", required=True, help="results CSV")
    s.add_argument("--resume", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--topics", type=int, help="topic count for every dataset")
    s.add_argument("--grid", help="JSON file overriding the hyperparameter ranges")
    s.add_argument("--with-defaults", action="store_true", help="add each DR's default setting")
    s.add_argument("--embeddings", nargs="*", metavar="NAME=FILE")
    s.add_argument("--reference-space", default="tm-space", choices=["tm-space", "vsm"])
    s.add_argument("--timeout", type=float, help="per-job wall-clock limit in seconds")
    s.add_argument("--memory-mb", type=int, help="per-worker address-space limit")
    s.add_argument("--no-runtime", action="store_true", help="leave runtime_s empty for reproducible files")
    s.set_defaults(func=cmd_grid)

    s = sub.add_parser("analyze", help="write the analysis CSV bundle for a results file")
    s.add_argument("results")
    s.add_argument("out", help="output directory")
    s.add_argument("--threshold", type=float, default=0.8)
    s.add_argument("--method", default="pearson", choices=["pearson", "spearman"])
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("plot", help="render a layout CSV as SVG")
    s.add_argument("layout")
    s.add_argument("out")
    s.add_argument("--title")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
