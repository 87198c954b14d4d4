"""
Hyperparameter grids and the benchmark runner.

A :class:`LayoutConfig` names one layout algorithm (topic model, tf-idf
toggle, DR with its hyperparameters, linear-combination toggle) applied to
one dataset. :func:`run_benchmark` evaluates a list of configs and keeps one
results-CSV row per config. Topic models are fitted once per
``(dataset, tm, tfidf, K)`` and shared by every DR job.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import logging
import os
import random
import signal
import threading
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import multiprocessing as mp
import numpy as np
import pandas as pd

from .corpus import Corpus
from .models import DistanceMatrix, ModelError, fit_representation, pairwise_distances
from .projection import DRParams, Layout, ProjectionError, project, project_topics
from .quality import MetricError, evaluate_layout

logger = logging.getLogger(__name__)

TOPIC_MODELS = ("VSM", "LSI", "NMF", "LDA", "EXT")
DR_NAMES = {"TSNE": "t-SNE", "UMAP": "UMAP", "MDS": "MDS", "SOM": "SOM"}
REFERENCE_SPACES = ("tm-space", "vsm")

DEFAULT_GRID = {
    "TSNE": {
        "learning_rate": [250, 1000, 2000, 4000, 10000],
        "n_iter": [10, 17, 28, 46, 77, 129, 215, 359, 599, 1000],
        "perplexity": [5, 10, 15, 20, 25, 30, 35, 40, 45, 50],
    },
    "UMAP": {
        "min_dist": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        "n_neighbors": [2, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20],
    },
    "SOM": {"grid_m": list(range(10, 21)), "grid_n": list(range(10, 21))},
    "MDS": {"max_iter": list(range(300, 901, 20))},
}
FIXED_DR_PARAMS = {"TSNE": {}, "UMAP": {"epochs": None}, "SOM": {"epochs": 10}, "MDS": {}}

DEFAULT_HYPERPARAMS = {
    "TSNE": {"perplexity": 30, "n_iter": 1000, "learning_rate": "auto"},
    "UMAP": {"n_neighbors": 15, "min_dist": 0.1},
    "MDS": {"max_iter": 300},
}

CONFIG_COLUMNS = [
    "dataset", "tm", "tfidf", "K", "dr", "lincomb", "reference_space",
    "perplexity", "n_iter", "learning_rate", "min_dist", "n_neighbors",
    "grid_m", "grid_n", "max_iter", "epochs", "seed",
]
METRIC_COLUMNS = ["trust", "cont", "shepard", "nh", "dsc", "silhouette", "ch_raw", "db_raw"]
RESULT_COLUMNS = CONFIG_COLUMNS + METRIC_COLUMNS + ["runtime_s", "status"]
_DR_FIELDS = CONFIG_COLUMNS[7:16]


class RunnerError(ValueError):
    pass


def derive_seed(*parts) -> int:
    """Stable 31-bit seed from arbitrary parts (hash of their string forms)."""
    h = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:4], "big") & 0x7FFFFFFF


def heuristic_topic_count(n_classes: int, few_classes: int = 10) -> int:
    """``2k`` topics for corpora with few classes, else ``k``."""
    return 2 * n_classes if n_classes <= few_classes else n_classes


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    return str(v)


@dataclass(frozen=True)
class LayoutConfig:
    dataset: str
    tm: str
    tfidf: str
    dr: DRParams
    lincomb: str
    K: int | None = None
    reference_space: str = "tm-space"
    seed: int = 0

    def __post_init__(self):
        tm = self.tm.upper()
        object.__setattr__(self, "tm", tm)
        if tm not in TOPIC_MODELS:
            raise RunnerError(f"unknown topic model {self.tm!r}")
        if self.tfidf not in ("+", "-", "X") or self.lincomb not in ("+", "-", "X"):
            raise RunnerError("tfidf and lincomb flags must be '+', '-' or 'X'")
        if (self.tfidf == "X") != (tm in ("LDA", "EXT")):
            raise RunnerError(f"tfidf flag {self.tfidf!r} invalid for {tm}")
        if (self.lincomb == "X") != (tm in ("VSM", "EXT")):
            raise RunnerError(f"lincomb flag {self.lincomb!r} invalid for {tm}")
        if tm in ("LSI", "NMF", "LDA") and (self.K is None or self.K < 1):
            raise RunnerError(f"{tm} needs a topic count K >= 1")
        if tm in ("VSM", "EXT") and self.K is not None:
            object.__setattr__(self, "K", None)
        if self.reference_space not in REFERENCE_SPACES:
            raise RunnerError(f"unknown reference space {self.reference_space!r}")

    def fields(self) -> dict:
        row = {
            "dataset": self.dataset,
            "tm": self.tm,
            "tfidf": self.tfidf,
            "K": self.K,
            "dr": self.dr.method,
            "lincomb": self.lincomb,
            "reference_space": self.reference_space,
        }
        for name in _DR_FIELDS:
            row[name] = getattr(self.dr, name)
        row["seed"] = self.seed
        return row

    def row(self) -> dict:
        return {k: _fmt(v) for k, v in self.fields().items()}

    def identity(self) -> tuple:
        """Everything but the seed, as formatted strings."""
        r = self.row()
        return tuple(r[c] for c in CONFIG_COLUMNS if c != "seed")

    def fit_key(self) -> tuple:
        return (self.dataset, self.tm, self.tfidf, self.K)


def encode_config_id(config: LayoutConfig) -> str:
    """Layout quadruple such as ``(LSI,+,t-SNE,-)``."""
    return f"({config.tm},{config.tfidf},{DR_NAMES[config.dr.method]},{config.lincomb})"


def dr_grid_params(method: str, grid: Mapping | None = None) -> list[dict]:
    method = method.upper().replace("-", "")
    ranges = (grid or DEFAULT_GRID)[method]
    names = list(ranges)
    combos = [dict(zip(names, values)) for values in itertools.product(*(ranges[n] for n in names))]
    return [{**FIXED_DR_PARAMS.get(method, {}), **c} for c in combos]


def expand_grid(
    datasets: Sequence[str],
    tms: Sequence[str],
    drs: Sequence[str] = ("TSNE", "UMAP", "SOM", "MDS"),
    dr_grid: Mapping | None = None,
    tfidf_options: Iterable[str] = ("+", "-"),
    lincomb_options: Iterable[str] = ("+", "-"),
    n_topics: int | Mapping[str, int] | None = None,
    reference_space: str = "tm-space",
    global_seed: int = 0,
    shuffle: bool = True,
    include_defaults: bool = False,
) -> list[LayoutConfig]:
    """Cartesian product of datasets, topic models, toggles and DR grids.

    Toggle combinations that a topic model cannot take (tf-idf for LDA/EXT,
    linear combination for VSM/EXT) are skipped; for those models the flag is
    ``X``. ``include_defaults`` adds each DR's library-default setting when it
    is not already part of the grid. Every config gets a seed derived from
    ``global_seed`` and its identity; the list is shuffled with
    ``global_seed``.
    """
    if not datasets or not tms:
        raise RunnerError("need at least one dataset and one topic model")
    tfidf_options = set(tfidf_options) | {"X"}
    lincomb_options = set(lincomb_options) | {"X"}
    dr_settings = {}
    for dr in drs:
        method = dr.upper().replace("-", "")
        settings = dr_grid_params(method, dr_grid)
        if include_defaults and method in DEFAULT_HYPERPARAMS:
            default = {**FIXED_DR_PARAMS.get(method, {}), **DEFAULT_HYPERPARAMS[method]}
            if default not in settings:
                settings.append(default)
        dr_settings[method] = settings

    configs = []
    for dataset in datasets:
        for tm in tms:
            tm = tm.upper()
            if tm in ("LSI", "NMF", "LDA"):
                K = n_topics.get(dataset) if isinstance(n_topics, Mapping) else n_topics
                if K is None:
                    raise RunnerError(f"no topic count given for {tm} on {dataset}")
            else:
                K = None
            for tfidf, lincomb in itertools.product(sorted(tfidf_options), sorted(lincomb_options)):
                if (tfidf == "X") != (tm in ("LDA", "EXT")) or (lincomb == "X") != (tm in ("VSM", "EXT")):
                    continue
                for method, settings in dr_settings.items():
                    for s in settings:
                        params = DRParams(method, **s)
                        cfg = LayoutConfig(dataset, tm, tfidf, params, lincomb, K, reference_space)
                        seed = derive_seed(global_seed, *cfg.identity())
                        configs.append(
                            LayoutConfig(dataset, tm, tfidf, params.with_seed(seed), lincomb, K, reference_space, seed)
                        )
    if not configs:
        raise RunnerError("grid expansion produced no configurations")
    if shuffle:
        random.Random(global_seed).shuffle(configs)
    return configs


# ----------------------------------------------------------------------------
# execution


@dataclass
class FittedModel:
    rep: object | None
    distances: DistanceMatrix | None
    error: str | None = None


@dataclass
class RunContext:
    """Immutable inputs shared by every job of a run."""

    labels: dict[str, np.ndarray]
    fits: dict[tuple, FittedModel]
    vsm_distances: dict[tuple, DistanceMatrix] = field(default_factory=dict)


class JobTimeout(Exception):
    pass


def _tm_seed(global_seed, key):
    return derive_seed(global_seed, "tm", *key)


def fit_models(
    corpora: Mapping[str, Corpus],
    configs: Sequence[LayoutConfig],
    global_seed: int = 0,
    externals: Mapping | None = None,
    tm_params: Mapping[str, dict] | None = None,
) -> RunContext:
    """Fit each distinct topic model once and precompute its distance matrix."""
    externals = externals or {}
    tm_params = tm_params or {}
    fits = {}
    vsm = {}
    for cfg in configs:
        if cfg.dataset not in corpora:
            raise RunnerError(f"unknown dataset {cfg.dataset!r}")
        key = cfg.fit_key()
        if key not in fits:
            corpus = corpora[cfg.dataset]
            try:
                extra = dict(tm_params.get(cfg.tm, {}))
                if cfg.tm == "EXT":
                    if cfg.dataset not in externals:
                        raise ModelError(f"no external embeddings for {cfg.dataset}")
                    extra["embeddings"] = externals[cfg.dataset]
                rep = fit_representation(
                    corpus, cfg.tm, cfg.K, tfidf=cfg.tfidf == "+", seed=_tm_seed(global_seed, key), **extra
                )
                fits[key] = FittedModel(rep, pairwise_distances(rep))
            except (ModelError, ValueError) as exc:
                logger.warning("fit %s failed: %s", key, exc)
                fits[key] = FittedModel(None, None, f"model-error:{exc}")
        if cfg.reference_space == "vsm":
            vkey = (cfg.dataset, cfg.tfidf == "+")
            if vkey not in vsm:
                try:
                    rep = fit_representation(corpora[cfg.dataset], "VSM", tfidf=vkey[1])
                    vsm[vkey] = pairwise_distances(rep)
                except (ModelError, ValueError) as exc:
                    logger.warning("VSM reference for %s failed: %s", vkey, exc)
    labels = {name: np.asarray(c.labels) for name, c in corpora.items()}
    return RunContext(labels=labels, fits=fits, vsm_distances=vsm)


def compute_layout(cfg: LayoutConfig, fitted: FittedModel) -> Layout:
    ref = encode_config_id(cfg)
    if cfg.lincomb == "+":
        return project_topics(fitted.rep, cfg.dr, ref)
    data = fitted.rep if cfg.dr.method == "SOM" else fitted.distances
    return project(data, cfg.dr, ref)


def _failure_reason(exc: BaseException) -> str:
    if isinstance(exc, ProjectionError):
        return exc.reason
    if isinstance(exc, JobTimeout):
        return "timeout"
    if isinstance(exc, MemoryError):
        return "memory"
    if isinstance(exc, ModelError):
        return "model-error"
    if isinstance(exc, MetricError):
        return "metric-error"
    return type(exc).__name__.lower()


def _on_alarm(signum, frame):
    raise JobTimeout()


def run_job(cfg: LayoutConfig, ctx: RunContext, timeout: float | None = None) -> tuple[dict, float]:
    """Evaluate one config; never raises for job-level failures."""
    row = cfg.row()
    row.update({c: "" for c in METRIC_COLUMNS})
    use_alarm = timeout is not None and threading.current_thread() is threading.main_thread()
    start = time.perf_counter()
    try:
        if use_alarm:
            old = signal.signal(signal.SIGALRM, _on_alarm)
            signal.setitimer(signal.ITIMER_REAL, timeout)
        try:
            fitted = ctx.fits[cfg.fit_key()]
            if fitted.error:
                raise ModelError(fitted.error)
            layout = compute_layout(cfg, fitted)
            if cfg.reference_space == "vsm":
                d_high = ctx.vsm_distances.get((cfg.dataset, cfg.tfidf == "+"))
                if d_high is None:
                    raise MetricError("VSM reference distances unavailable")
            else:
                d_high = fitted.distances
            metrics = evaluate_layout(d_high, layout, ctx.labels[cfg.dataset], seed=cfg.seed)
        finally:
            if use_alarm:
                signal.setitimer(signal.ITIMER_REAL, 0)
                signal.signal(signal.SIGALRM, old)
        for c in METRIC_COLUMNS:
            row[c] = _fmt(getattr(metrics, c))
        row["status"] = "ok"
    except Exception as exc:  # noqa: BLE001 - every failure becomes a results row
        row["status"] = f"failed:{_failure_reason(exc)}"
        logger.info("job %s failed: %s", encode_config_id(cfg), exc)
    return row, time.perf_counter() - start


_WORKER: dict = {}


def _init_worker(ctx, timeout, memory_limit_mb):
    _WORKER["ctx"] = ctx
    _WORKER["timeout"] = timeout
    if memory_limit_mb:
        import resource

        limit = int(memory_limit_mb) * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))


def _worker_job(cfg):
    return run_job(cfg, _WORKER["ctx"], _WORKER["timeout"])


def row_identity(row: Mapping) -> tuple:
    return tuple(row[c] for c in CONFIG_COLUMNS)


def _sort_key(row):
    key = []
    for c in CONFIG_COLUMNS:
        v = row[c]
        try:
            key.append((0, float(v), ""))
        except ValueError:
            key.append((1, 0.0, v))
    return key


def read_result_rows(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise RunnerError(f"{path} does not have the results header")
        # a torn final line (interrupted write) lacks the status field
        return [r for r in reader if r.get("status")]


def finalize_results(path: str | Path) -> list[dict]:
    """Deduplicate rows by config identity and rewrite them in canonical order."""
    path = Path(path)
    rows = {}
    for r in read_result_rows(path):
        rows.setdefault(row_identity(r), r)
    ordered = sorted(rows.values(), key=_sort_key)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(ordered)
    os.replace(tmp, path)
    return ordered


def run_benchmark(
    corpora: Mapping[str, Corpus],
    configs: Sequence[LayoutConfig],
    out: str | Path,
    parallelism: int = 1,
    resume: bool = True,
    global_seed: int = 0,
    externals: Mapping | None = None,
    tm_params: Mapping[str, dict] | None = None,
    job_timeout: float | None = None,
    memory_limit_mb: int | None = None,
    record_runtime: bool = True,
) -> pd.DataFrame:
    """Run every config and keep one results row per config in ``out``.

    Rows already present in ``out`` are skipped when ``resume`` is set.
    Failed jobs get ``status = failed:<reason>`` and do not stop the run.
    The file is finalized (deduplicated, sorted by config identity) at the
    end, so its content does not depend on ``parallelism``. With
    ``record_runtime=False`` the runtime column is left empty and the
    finalized file is byte-for-byte reproducible.
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for cfg in configs:
        if cfg.dataset not in corpora:
            raise RunnerError(f"unknown dataset {cfg.dataset!r}")
    existing = {row_identity(r) for r in read_result_rows(out)} if resume else set()
    if not resume or not out.exists() or out.stat().st_size == 0:
        with out.open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(RESULT_COLUMNS)
    elif not out.read_bytes().endswith(b"\n"):
        with out.open("a", encoding="utf-8") as fh:
            fh.write("\n")

    seen = set(existing)
    pending = []
    for cfg in configs:
        ident = tuple(cfg.row()[c] for c in CONFIG_COLUMNS)
        if ident not in seen:
            seen.add(ident)
            pending.append(cfg)
    logger.info("%d configs, %d already done, %d to run", len(configs), len(configs) - len(pending), len(pending))

    if pending:
        ctx = fit_models(corpora, pending, global_seed, externals, tm_params)
        with out.open("a", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")

            def emit(row, seconds):
                row["runtime_s"] = f"{seconds:.6f}" if record_runtime else ""
                writer.writerow(row)
                fh.flush()

            if parallelism <= 1 and not memory_limit_mb:
                for cfg in pending:
                    emit(*run_job(cfg, ctx, job_timeout))
            else:
                mp_ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
                with ProcessPoolExecutor(
                    max_workers=max(1, parallelism),
                    mp_context=mp_ctx,
                    initializer=_init_worker,
                    initargs=(ctx, job_timeout, memory_limit_mb),
                ) as pool:
                    futures = {pool.submit(_worker_job, cfg): cfg for cfg in pending}
                    for fut in as_completed(futures):
                        try:
                            emit(*fut.result())
                        except Exception as exc:  # noqa: BLE001 - worker crash
                            row = futures[fut].row()
                            row.update({c: "" for c in METRIC_COLUMNS})
                            row["status"] = f"failed:{_failure_reason(exc)}"
                            emit(row, 0.0)
    finalize_results(out)
    return load_results(out)


_NUMERIC_COLUMNS = [c for c in RESULT_COLUMNS if c not in
                    ("dataset", "tm", "tfidf", "dr", "lincomb", "reference_space", "learning_rate", "status")]


def load_results(path: str | Path) -> pd.DataFrame:
    """Results CSV as a DataFrame; empty numeric cells become NaN.

    ``learning_rate`` stays textual because it may read ``auto``.
    """
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    for c in _NUMERIC_COLUMNS:
        df[c] = pd.to_numeric(df[c].where(df[c] != "", None))
    return df
