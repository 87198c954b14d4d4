"""
Post-processing of benchmark results tables.

All functions take the DataFrame produced by
:func:`spatbench.runner.load_results` (or any frame with the same columns)
and only use rows whose ``status`` is ``ok``.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd
from scipy import stats
from scipy.sparse.csgraph import connected_components

from .projection.base import Layout
from .runner import CONFIG_COLUMNS, DEFAULT_HYPERPARAMS, DR_NAMES

logger = logging.getLogger(__name__)

GROUP_COLUMNS = ["dataset", "tm", "tfidf"]
CORRELATION_METRICS = ["trust", "cont", "shepard", "nh", "beta_ch", "inv_beta_db", "dsc", "silhouette"]
SUMMARY_GROUPS = ("tm", "tfidf", "lincomb", "dr")
CONFIDENCE = 0.99

# fixed categorical palette (Tableau 20 order)
PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
    "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
]


class AnalysisError(ValueError):
    pass


def ok_rows(results: pd.DataFrame) -> pd.DataFrame:
    return results[results["status"] == "ok"].copy()


def _max_normalize(values: pd.Series) -> pd.Series:
    finite = values[np.isfinite(values)]
    if finite.empty:
        raise AnalysisError("group has no finite values to normalize")
    top = finite.max()
    out = values / top if top > 0 else pd.Series(1.0, index=values.index)
    out[np.isinf(values)] = 1.0
    return out


def normalize_group_metrics(results: pd.DataFrame, group_by: Sequence[str] = GROUP_COLUMNS) -> pd.DataFrame:
    """Add ``beta_ch`` and ``beta_db``: raw CH/DB divided by their group maximum.

    Infinite raw values are left out of the maximum and map to 1. Groups are
    dataset and topic model (with its tf-idf flag).
    """
    df = ok_rows(results)
    if df.empty:
        raise AnalysisError("no ok rows")
    df["beta_ch"] = np.nan
    df["beta_db"] = np.nan
    for _, idx in df.groupby(list(group_by), sort=True, dropna=False).groups.items():
        df.loc[idx, "beta_ch"] = _max_normalize(df.loc[idx, "ch_raw"].astype(float))
        df.loc[idx, "beta_db"] = _max_normalize(df.loc[idx, "db_raw"].astype(float))
    return df


def aggregate_alpha(trust, cont, shepard, nh):
    """Accuracy score in [0, 1]: half neighborhood hit, half the mean of
    trustworthiness, continuity and the rescaled Shepard correlation."""
    return 0.5 * nh + 0.5 * (trust + cont + 0.5 * (shepard + 1.0)) / 3.0


def aggregate_beta(beta_db, beta_ch, silhouette, dsc):
    """Perception score in [0, 1] from normalized DB and CH, silhouette and DSC."""
    return (1.0 - beta_db) / 3.0 + beta_ch / 3.0 + (0.5 * (silhouette + 1.0) + dsc) / 6.0


def add_aggregates(results: pd.DataFrame) -> pd.DataFrame:
    """Ok rows with ``beta_ch``, ``beta_db``, ``alpha`` and ``beta`` columns."""
    df = normalize_group_metrics(results) if "beta_ch" not in results else ok_rows(results)
    df["alpha"] = aggregate_alpha(df["trust"], df["cont"], df["shepard"], df["nh"])
    df["beta"] = aggregate_beta(df["beta_db"], df["beta_ch"], df["silhouette"], df["dsc"])
    return df


def _ensure_aggregates(results):
    return results if {"alpha", "beta"} <= set(results.columns) else add_aggregates(results)


def metric_correlations(results: pd.DataFrame, threshold: float = 0.8, method: str = "pearson"):
    """Pairwise metric correlations and the groups they induce.

    Davies-Bouldin enters as ``1 - beta_db``. Two metrics share a group when
    they are linked by a chain of correlations ``>= threshold``. Constant
    columns get NaN correlations and are left out of every group.

    Returns
    -------
    corr : DataFrame
        8 x 8 correlation matrix.
    groups : list of list of str
        Connected components, ordered by first appearance.
    """
    if method not in ("pearson", "spearman"):
        raise ValueError("method must be 'pearson' or 'spearman'")
    df = results if "beta_ch" in results else normalize_group_metrics(results)
    df = df[df["status"] == "ok"] if "status" in df else df
    if len(df) < 3:
        raise AnalysisError("need at least 3 ok rows")
    table = pd.DataFrame({c: df[c].astype(float) for c in CORRELATION_METRICS if c != "inv_beta_db"})
    table["inv_beta_db"] = 1.0 - df["beta_db"].astype(float)
    table = table[CORRELATION_METRICS]
    X = table.to_numpy()
    if method == "spearman":
        X = np.column_stack([stats.rankdata(col) for col in X.T])
    X = X - X.mean(axis=0)
    norms = np.sqrt((X**2).sum(axis=0))
    constant = norms <= 1e-12 * np.maximum(1.0, np.abs(table.to_numpy()).max(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        C = (X.T @ X) / np.outer(norms, norms)
    C = np.clip(C, -1.0, 1.0)
    C[constant, :] = np.nan
    C[:, constant] = np.nan
    corr = pd.DataFrame(C, index=CORRELATION_METRICS, columns=CORRELATION_METRICS)

    adj = np.nan_to_num(C, nan=-np.inf) >= threshold
    _, comp = connected_components(adj.astype(np.int8), directed=False)
    groups, seen = [], {}
    for i, name in enumerate(CORRELATION_METRICS):
        if constant[i]:
            continue
        if comp[i] not in seen:
            seen[comp[i]] = len(groups)
            groups.append([])
        groups[seen[comp[i]]].append(name)
    return corr, groups


def sign_test(n: int, k: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """One-sided exact binomial test of ``P(improve) > 0.5``.

    Returns the p-value ``P[X >= k]`` under ``Binomial(n, 0.5)`` and the
    one-sided Clopper-Pearson lower confidence bound on the improvement
    probability (the upper bound is 1).
    """
    if n < 1 or not 0 <= k <= n:
        raise AnalysisError(f"invalid sign-test counts n={n}, k={k}")
    p = float(stats.binom.sf(k - 1, n, 0.5))
    lower = 0.0 if k == 0 else float(stats.beta.ppf(1.0 - confidence, k, n - k + 1))
    return p, lower


_TOGGLES = {"tfidf": ("+", "-"), "lincomb": ("+", "-")}


def matched_pairs(results: pd.DataFrame, toggle: str) -> pd.DataFrame:
    """Rows identical in every config column except ``toggle`` (and seed).

    One row per pair with the ``on``/``off`` values of alpha and beta.
    """
    if toggle not in _TOGGLES:
        raise ValueError(f"toggle must be one of {sorted(_TOGGLES)}")
    df = _ensure_aggregates(results)
    on, off = _TOGGLES[toggle]
    df = df[df[toggle].isin([on, off])]
    columns = ["dataset", "alpha_on", "alpha_off", "beta_on", "beta_off"]
    if df.empty:
        return pd.DataFrame(columns=columns)
    key = [c for c in CONFIG_COLUMNS if c not in (toggle, "seed")]
    keyed = df[key].astype(str).agg("|".join, axis=1)
    a = df[df[toggle] == on].assign(_key=keyed).drop_duplicates("_key").set_index("_key")
    b = df[df[toggle] == off].assign(_key=keyed).drop_duplicates("_key").set_index("_key")
    common = a.index.intersection(b.index).sort_values()
    return pd.DataFrame(
        {
            "dataset": a.loc[common, "dataset"].to_numpy(),
            "alpha_on": a.loc[common, "alpha"].to_numpy(),
            "alpha_off": b.loc[common, "alpha"].to_numpy(),
            "beta_on": a.loc[common, "beta"].to_numpy(),
            "beta_off": b.loc[common, "beta"].to_numpy(),
        },
        index=common,
    )


def paired_sign_test(results: pd.DataFrame, toggle: str, metric: str = "alpha",
                     confidence: float = CONFIDENCE) -> pd.DataFrame:
    """Per-dataset and total sign tests of "toggle on strictly improves metric".

    Ties count as non-improvements.
    """
    if metric not in ("alpha", "beta"):
        raise ValueError("metric must be 'alpha' or 'beta'")
    pairs = matched_pairs(results, toggle)
    if pairs.empty:
        raise AnalysisError(f"no matched pairs for toggle {toggle!r}")
    improved = pairs[f"{metric}_on"] > pairs[f"{metric}_off"]
    rows = []
    for name, sub in list(improved.groupby(pairs["dataset"], sort=True)) + [("Total", improved)]:
        n, k = int(sub.size), int(sub.sum())
        p, lower = sign_test(n, k, confidence)
        rows.append({"dataset": name, "n": n, "k": k, "p_value": p, "conf_lower": lower})
    return pd.DataFrame(rows)


def layout_ids(df: pd.DataFrame) -> pd.Series:
    return "(" + df["tm"] + "," + df["tfidf"] + "," + df["dr"].map(DR_NAMES) + "," + df["lincomb"] + ")"


def best_results(results: pd.DataFrame, metric: str = "alpha", decimals: int = 2) -> pd.DataFrame:
    """Best layout algorithms per dataset.

    The best value is compared after rounding to ``decimals``, so every
    layout quadruple reaching the rounded maximum is listed.
    """
    df = _ensure_aggregates(results)
    df = df.assign(layout=layout_ids(df), _r=df[metric].round(decimals))
    rows = []
    for dataset, sub in df.groupby("dataset", sort=True):
        top = sub["_r"].max()
        winners = sub[sub["_r"] == top]
        for layout in sorted(set(winners["layout"])):
            rows.append({"dataset": dataset, "layout": layout, "value": top,
                         "raw_max": float(winners.loc[winners["layout"] == layout, metric].max())})
    return pd.DataFrame(rows, columns=["dataset", "layout", "value", "raw_max"])


def five_number_summary(results: pd.DataFrame, metric: str = "alpha",
                        group_by: Sequence[str] = SUMMARY_GROUPS) -> pd.DataFrame:
    """Min, quartiles (linear interpolation) and max of ``metric`` per group."""
    df = _ensure_aggregates(results) if metric in ("alpha", "beta") else ok_rows(results)
    rows = []
    for key, sub in df.groupby(list(group_by), sort=True):
        q = np.percentile(sub[metric].to_numpy(dtype=float), [0, 25, 50, 75, 100])
        rows.append({**dict(zip(group_by, key)), "n": len(sub), "min": q[0], "q1": q[1],
                     "median": q[2], "q3": q[3], "max": q[4]})
    return pd.DataFrame(rows)


def _is_default(df: pd.DataFrame, defaults: Mapping) -> pd.Series:
    mask = pd.Series(True, index=df.index)
    for name, value in defaults.items():
        if isinstance(value, str):
            mask &= df[name].astype(str) == value
        else:
            mask &= pd.to_numeric(df[name], errors="coerce") == float(value)
    return mask


def default_percentile(results: pd.DataFrame, metric: str = "alpha",
                       defaults: Mapping[str, Mapping] = DEFAULT_HYPERPARAMS) -> pd.DataFrame:
    """Share of hyperparameter settings strictly better than the DR default.

    Computed per dataset and layout algorithm, then averaged over datasets.
    The default row counts in the denominator. Groups without a default row
    are skipped (logged, and listed in ``attrs["missing"]``).
    """
    df = _ensure_aggregates(results)
    keys = ["dataset", "tm", "tfidf", "lincomb", "dr", "reference_space"]
    per_dataset, missing = [], []
    for key, sub in df.groupby(keys, sort=True):
        dr = key[4]
        if dr not in defaults:
            continue
        default = sub[_is_default(sub, defaults[dr])]
        if default.empty:
            missing.append(key)
            logger.warning("no default row for %s", key)
            continue
        ref = float(default[metric].iloc[0])
        frac = float((sub[metric] > ref).sum()) / len(sub)
        per_dataset.append(dict(zip(keys, key), fraction=frac))
    if not per_dataset:
        out = pd.DataFrame(columns=["tm", "tfidf", "lincomb", "dr", "reference_space", "fraction", "n_datasets"])
    else:
        table = pd.DataFrame(per_dataset)
        out = (table.groupby(["tm", "tfidf", "lincomb", "dr", "reference_space"], sort=True)["fraction"]
               .agg(["mean", "size"]).rename(columns={"mean": "fraction", "size": "n_datasets"}).reset_index())
    out.attrs["missing"] = missing
    return out


def write_report(results: pd.DataFrame, out_dir: str | Path, threshold: float = 0.8,
                 method: str = "pearson") -> dict[str, Path]:
    """Write the analysis CSV bundle into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    df = add_aggregates(results)
    paths = {}

    corr, groups = metric_correlations(df, threshold, method)
    group_of = {name: i for i, g in enumerate(groups) for name in g}
    table = corr.copy()
    table.insert(0, "metric", table.index)
    table["group"] = [group_of.get(n, "") for n in table.index]
    table["method"] = method
    paths["correlations"] = out / "correlations.csv"
    table.to_csv(paths["correlations"], index=False, float_format="%.12g")

    frames = []
    for toggle in ("tfidf", "lincomb"):
        try:
            a = paired_sign_test(df, toggle, "alpha")
            b = paired_sign_test(df, toggle, "beta")
        except AnalysisError as exc:
            logger.warning("sign test for %s skipped: %s", toggle, exc)
            continue
        merged = a.rename(columns={"k": "alpha_k", "p_value": "alpha_p_value", "conf_lower": "alpha_conf_lower"})
        merged = merged.merge(b.drop(columns="n").rename(
            columns={"k": "beta_k", "p_value": "beta_p_value", "conf_lower": "beta_conf_lower"}), on="dataset")
        merged.insert(0, "toggle", toggle)
        frames.append(merged)
    sign_cols = ["toggle", "dataset", "n", "alpha_k", "alpha_p_value", "alpha_conf_lower",
                 "beta_k", "beta_p_value", "beta_conf_lower"]
    paths["sign_tests"] = out / "sign_tests.csv"
    (pd.concat(frames) if frames else pd.DataFrame(columns=sign_cols))[sign_cols].to_csv(
        paths["sign_tests"], index=False, float_format="%.12g")

    best = pd.concat([best_results(df, m).assign(metric=m) for m in ("alpha", "beta")])
    paths["best"] = out / "best.csv"
    best[["metric", "dataset", "layout", "value", "raw_max"]].to_csv(paths["best"], index=False, float_format="%.12g")

    summaries = pd.concat([five_number_summary(df, m).assign(metric=m) for m in ("alpha", "beta")])
    paths["summaries"] = out / "summaries.csv"
    cols = ["metric", *SUMMARY_GROUPS, "n", "min", "q1", "median", "q3", "max"]
    summaries[cols].to_csv(paths["summaries"], index=False, float_format="%.12g")

    pct = pd.concat([default_percentile(df, m).assign(metric=m) for m in ("alpha", "beta")])
    paths["default_percentiles"] = out / "default_percentiles.csv"
    pct[["metric", "tm", "tfidf", "lincomb", "dr", "reference_space", "fraction", "n_datasets"]].to_csv(
        paths["default_percentiles"], index=False, float_format="%.12g")
    return paths


def export_layout_svg(layout, labels, out: str | Path, size: int = 1000, margin: float = 0.05,
                      radius: float = 4.0, title: str | None = None) -> Path:
    """Scatter plot of a layout as a standalone SVG file.

    Positions are scaled uniformly (aspect ratio kept) into the square
    viewbox minus the margin; y points up. A layout without extent is drawn
    at the center. Colors follow :data:`PALETTE` by sorted label.
    """
    Y = layout.positions if isinstance(layout, Layout) else np.asarray(layout, dtype=np.float64)
    if not np.all(np.isfinite(Y)):
        raise ValueError("layout has non-finite coordinates")
    labels = [str(x) for x in labels]
    if len(labels) != len(Y):
        raise ValueError("labels and layout differ in length")
    lo, hi = Y.min(axis=0), Y.max(axis=0)
    extent = float((hi - lo).max())
    inner = size * (1.0 - 2.0 * margin)
    mid = 0.5 * (lo + hi)
    if extent > 0:
        px = size / 2.0 + (Y[:, 0] - mid[0]) * inner / extent
        py = size / 2.0 - (Y[:, 1] - mid[1]) * inner / extent
    else:
        px = np.full(len(Y), size / 2.0)
        py = np.full(len(Y), size / 2.0)

    classes = sorted(set(labels))
    color = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(classes)}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" width="{size}" height="{size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        parts.append(f'<title>{escape(title)}</title>')
    parts.append('<g class="points" stroke="none" fill-opacity="0.8">')
    for x, y, c in zip(px, py, labels):
        parts.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{radius}" fill="{color[c]}"/>')
    parts.append("</g>")
    parts.append('<g class="legend" font-family="sans-serif" font-size="14">')
    for i, c in enumerate(classes):
        ty = 20 + 20 * i
        parts.append(f'<rect x="10" y="{ty - 11}" width="12" height="12" fill="{color[c]}"/>')
        parts.append(f'<text x="28" y="{ty}">{escape(c)}</text>')
    parts.append("</g>")
    parts.append("</svg>")
    out = Path(out)
    out.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return out
