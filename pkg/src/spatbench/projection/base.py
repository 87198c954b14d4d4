from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

DR_METHODS = ("TSNE", "UMAP", "MDS", "SOM")


class ProjectionError(ValueError):
    """A projection that cannot run; ``reason`` is a short slug for result tables."""

    def __init__(self, reason: str, message: str | None = None):
        super().__init__(message or reason)
        self.reason = reason


@dataclass(frozen=True, eq=False)
class Layout:
    positions: np.ndarray
    config_ref: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("layout positions must be an m x 2 array")
        if not np.all(np.isfinite(pos)):
            raise ProjectionError("non-finite", "layout has non-finite coordinates")
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.positions == self.positions[0]))


@dataclass(frozen=True)
class DRParams:
    """Hyperparameters of one dimensionality reduction.

    Only the fields of ``method`` are used; the others stay ``None``.
    ``epochs`` is the SOM epoch count or the UMAP optimization epoch count.
    ``learning_rate="auto"`` resolves to ``max(m / 48, 50)``.
    """

    method: str
    perplexity: float | None = None
    n_iter: int | None = None
    learning_rate: float | str | None = None
    min_dist: float | None = None
    n_neighbors: int | None = None
    grid_m: int | None = None
    grid_n: int | None = None
    max_iter: int | None = None
    epochs: int | None = None
    seed: int = 0

    def __post_init__(self):
        method = self.method.upper().replace("-", "")
        if method not in DR_METHODS:
            raise ValueError(f"unknown DR method {self.method!r}")
        object.__setattr__(self, "method", method)
        if method == "TSNE":
            if self.perplexity is None or self.perplexity < 2:
                raise ValueError("t-SNE perplexity must be >= 2")
            if self.n_iter is None or self.n_iter < 1:
                raise ValueError("t-SNE n_iter must be >= 1")
            lr = self.learning_rate
            if not (lr == "auto" or (lr is not None and float(lr) > 0)):
                raise ValueError("t-SNE learning_rate must be positive or 'auto'")
        elif method == "UMAP":
            if self.n_neighbors is None or self.n_neighbors < 2:
                raise ValueError("UMAP n_neighbors must be >= 2")
            if self.min_dist is None or self.min_dist < 0:
                raise ValueError("UMAP min_dist must be >= 0")
            if self.epochs is not None and self.epochs < 1:
                raise ValueError("UMAP epochs must be >= 1")
        elif method == "MDS":
            if self.max_iter is None or self.max_iter < 1:
                raise ValueError("MDS max_iter must be >= 1")
        else:
            if self.grid_m is None or self.grid_n is None or self.grid_m < 2 or self.grid_n < 2:
                raise ValueError("SOM grid sides must be >= 2")
            if self.epochs is None or self.epochs < 1:
                raise ValueError("SOM epochs must be >= 1")

    @classmethod
    def tsne(cls, perplexity=30.0, n_iter=1000, learning_rate="auto", seed=0):
        return cls("TSNE", perplexity=perplexity, n_iter=n_iter, learning_rate=learning_rate, seed=seed)

    @classmethod
    def umap(cls, n_neighbors=15, min_dist=0.1, epochs=None, seed=0):
        return cls("UMAP", n_neighbors=n_neighbors, min_dist=min_dist, epochs=epochs, seed=seed)

    @classmethod
    def mds(cls, max_iter=300, seed=0):
        return cls("MDS", max_iter=max_iter, seed=seed)

    @classmethod
    def som(cls, grid_m=10, grid_n=10, epochs=10, seed=0):
        return cls("SOM", grid_m=grid_m, grid_n=grid_n, epochs=epochs, seed=seed)

    def with_seed(self, seed: int) -> "DRParams":
        return replace(self, seed=seed)


def write_layout_csv(layout: Layout, doc_ids, labels, path: str | Path) -> Path:
    path = Path(path)
    if len(doc_ids) != layout.m or len(labels) != layout.m:
        raise ValueError("doc_ids and labels must match the layout length")
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["doc_id", "x", "y", "label"])
        for d, (x, y), c in zip(doc_ids, layout.positions, labels):
            w.writerow([d, repr(float(x)), repr(float(y)), c])
    return path


def read_layout_csv(path: str | Path) -> tuple[Layout, list[str], list[str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"layout file {path} has no rows")
    pos = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    return Layout(pos, config_ref=Path(path).stem), [r["doc_id"] for r in rows], [r["label"] for r in rows]
