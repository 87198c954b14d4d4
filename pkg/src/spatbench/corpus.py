"""
Labeled text corpora as sparse document-term matrices.

Corpora come from a directory tree (one subdirectory per class label), from
the three-file DTM format, or from :func:`generate_synthetic_corpus`.
"""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)

DEFAULT_STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be because
    been before being below between both but by can could did do does doing
    down during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more most
    my myself no nor not now of off on once only or other our ours ourselves out
    over own same she should so some such than that the their theirs them
    themselves then there these they this those through to too under until up
    very was we were what when where which while who whom why will with would
    you your yours yourself yourselves
    """.split()
)


class CorpusError(ValueError):
    """Raised for malformed, empty or inconsistent corpora."""


@dataclass(frozen=True, eq=False)
class Corpus:
    """Sparse document-term counts with one class label per document.

    Rows of ``dtm`` are documents in ``doc_ids`` order, columns follow
    ``vocabulary``.
    """

    dtm: sp.csr_matrix
    vocabulary: tuple[str, ...]
    labels: tuple[str, ...]
    doc_ids: tuple[str, ...]
    name: str = "corpus"
    empty_docs: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        dtm = sp.csr_matrix(self.dtm, dtype=np.float64)
        dtm.sum_duplicates()
        dtm.eliminate_zeros()
        object.__setattr__(self, "dtm", dtm)
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "doc_ids", tuple(self.doc_ids))
        m, n = dtm.shape
        if m == 0:
            raise CorpusError("empty corpus (no documents)")
        if len(self.vocabulary) != n:
            raise CorpusError(f"vocabulary has {len(self.vocabulary)} terms but dtm has {n} columns")
        if len(set(self.vocabulary)) != n:
            raise CorpusError("vocabulary entries are not unique")
        if len(self.labels) != m:
            raise CorpusError(f"{len(self.labels)} labels for {m} documents")
        if len(self.doc_ids) != m:
            raise CorpusError(f"{len(self.doc_ids)} doc ids for {m} documents")
        if len(set(self.doc_ids)) != m:
            raise CorpusError("document ids are not unique")
        if dtm.nnz and dtm.data.min() < 0:
            raise CorpusError("negative term counts")

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            (self.name, self.vocabulary, self.labels, self.doc_ids)
            == (other.name, other.vocabulary, other.labels, other.doc_ids)
            and self.dtm.shape == other.dtm.shape
            and (self.dtm != other.dtm).nnz == 0
        )

    __hash__ = None

    @property
    def m(self) -> int:
        return self.dtm.shape[0]

    @property
    def n(self) -> int:
        return self.dtm.shape[1]

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    @property
    def k(self) -> int:
        return len(set(self.labels))

    def label_codes(self) -> np.ndarray:
        """Integer class codes (index into :attr:`classes`) per document."""
        lookup = {c: i for i, c in enumerate(self.classes)}
        return np.array([lookup[x] for x in self.labels], dtype=np.int64)


@dataclass(frozen=True)
class PreprocessConfig:
    """Tokenization and vocabulary filtering choices.

    Tokens are maximal runs of letters after lowercasing; digits, underscores
    and punctuation separate tokens. ``strip_suffixes`` enables a crude
    plural/verb-ending normalization in place of lemmatization.
    """

    stopwords: frozenset = DEFAULT_STOPWORDS
    min_df: int = 1
    max_df_fraction: float = 1.0
    min_token_length: int = 1
    strip_suffixes: bool = False

    def __post_init__(self):
        object.__setattr__(self, "stopwords", frozenset(w.lower() for w in self.stopwords))
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")
        if not 0.0 < self.max_df_fraction <= 1.0:
            raise ValueError("max_df_fraction must lie in (0, 1]")


def _normalize(token: str) -> str:
    for suffix, repl in (("ies", "y"), ("sses", "ss"), ("ing", ""), ("ed", ""), ("s", "")):
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            if suffix == "s" and token.endswith("ss"):
                return token
            return token[: len(token) - len(suffix)] + repl
    return token


def tokenize(text: str, config: PreprocessConfig | None = None) -> list[str]:
    config = config or PreprocessConfig()
    tokens = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) < config.min_token_length or tok in config.stopwords:
            continue
        if config.strip_suffixes:
            tok = _normalize(tok)
            if tok in config.stopwords:
                continue
        tokens.append(tok)
    return tokens


def preprocess(
    raw_docs: Sequence[tuple[str, str, str]],
    config: PreprocessConfig | None = None,
    name: str = "corpus",
) -> Corpus:
    """Tokenize ``(doc_id, label, text)`` triples into a :class:`Corpus`.

    Terms whose document frequency falls outside
    ``[min_df, max_df_fraction * m]`` are dropped and the vocabulary is sorted.
    Documents left without any term are kept and listed in
    ``Corpus.empty_docs``.
    """
    config = config or PreprocessConfig()
    if not raw_docs:
        raise CorpusError("no documents to preprocess")
    docs = sorted(raw_docs, key=lambda d: d[0])
    counts = [Counter(tokenize(text, config)) for _, _, text in docs]
    m = len(docs)

    df = Counter()
    for c in counts:
        df.update(c.keys())
    max_df = config.max_df_fraction * m
    vocab = sorted(t for t, f in df.items() if config.min_df <= f <= max_df)
    if not vocab:
        raise CorpusError("all terms were filtered out (empty vocabulary)")
    col = {t: j for j, t in enumerate(vocab)}

    rows, cols, vals = [], [], []
    empty = []
    for i, c in enumerate(counts):
        kept = [(col[t], v) for t, v in c.items() if t in col]
        if not kept:
            empty.append(docs[i][0])
        for j, v in kept:
            rows.append(i)
            cols.append(j)
            vals.append(v)
    if empty:
        logger.warning("%d documents have no terms after filtering: %s", len(empty), empty[:10])
    dtm = sp.csr_matrix((vals, (rows, cols)), shape=(m, len(vocab)), dtype=np.float64)
    return Corpus(
        dtm=dtm,
        vocabulary=vocab,
        labels=[d[1] for d in docs],
        doc_ids=[d[0] for d in docs],
        name=name,
        empty_docs=tuple(empty),
    )


def read_label_directories(path: str | Path) -> list[tuple[str, str, str]]:
    """Collect ``(doc_id, label, text)`` from ``path/<label>/<file>``."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not subdirs:
        raise CorpusError(f"{root} contains no label subdirectories")
    docs = []
    for sub in subdirs:
        files = sorted(p for p in sub.iterdir() if p.is_file())
        if not files:
            raise CorpusError(f"label directory {sub} holds no files")
        for f in files:
            docs.append((f"{sub.name}/{f.name}", sub.name, f.read_text(encoding="utf-8")))
    return docs


def _parse_number(token: str, where: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise CorpusError(f"malformed numeric entry {token!r} in {where}") from None
    if not np.isfinite(value):
        raise CorpusError(f"non-finite entry {token!r} in {where}")
    return value


def read_dtm_files(path: str | Path, name: str | None = None) -> Corpus:
    root = Path(path)
    files = {k: root / f"{k}.txt" for k in ("matrix", "vocab", "labels")}
    for f in files.values():
        if not f.is_file():
            raise FileNotFoundError(f"missing DTM file: {f}")

    lines = files["matrix"].read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorpusError("matrix.txt is empty")
    header = lines[0].split()
    if len(header) != 3:
        raise CorpusError("matrix.txt header must be 'm n nnz'")
    try:
        m, n, nnz = (int(x) for x in header)
    except ValueError:
        raise CorpusError(f"malformed matrix header {lines[0]!r}") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != nnz:
        raise CorpusError(f"matrix.txt declares {nnz} entries but holds {len(body)}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    for t, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 3:
            raise CorpusError(f"matrix.txt line {t + 2}: expected 'row col count'")
        r, c, v = (_parse_number(p, f"matrix.txt line {t + 2}") for p in parts)
        if r != int(r) or c != int(c):
            raise CorpusError(f"matrix.txt line {t + 2}: non-integer index")
        if not (0 <= r < m and 0 <= c < n):
            raise CorpusError(f"matrix.txt line {t + 2}: index out of range for {m}x{n}")
        if v < 0:
            raise CorpusError(f"matrix.txt line {t + 2}: negative count")
        rows[t], cols[t], vals[t] = int(r), int(c), v

    vocab = files["vocab"].read_text(encoding="utf-8").split("\n")
    if vocab and vocab[-1] == "":
        vocab.pop()
    if len(vocab) != n:
        raise CorpusError(f"vocab.txt has {len(vocab)} terms, matrix has {n} columns")

    label_lines = files["labels"].read_text(encoding="utf-8").split("\n")
    if label_lines and label_lines[-1] == "":
        label_lines.pop()
    if len(label_lines) != m:
        raise CorpusError(f"labels.txt has {len(label_lines)} rows, matrix has {m} rows")
    doc_ids, labels = [], []
    for t, ln in enumerate(label_lines):
        parts = ln.split("\t")
        if len(parts) != 2:
            raise CorpusError(f"labels.txt line {t + 1}: expected 'doc_id<TAB>label'")
        doc_ids.append(parts[0])
        labels.append(parts[1])

    dtm = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    order = sorted(range(m), key=lambda i: doc_ids[i])
    return Corpus(
        dtm=dtm[order],
        vocabulary=vocab,
        labels=[labels[i] for i in order],
        doc_ids=[doc_ids[i] for i in order],
        name=name or root.name,
    )


def load_corpus(
    path: str | Path,
    format: str = "label-directories",
    config: PreprocessConfig | None = None,
    name: str | None = None,
) -> Corpus:
    """Load a corpus from disk.

    Parameters
    ----------
    path : str or Path
        Corpus root directory.
    format : {"label-directories", "dtm-files"}
        ``label-directories`` reads one subdirectory per class and runs
        :func:`preprocess`; ``dtm-files`` reads ``matrix.txt``, ``vocab.txt``
        and ``labels.txt``.
    config : PreprocessConfig, optional
        Only used for ``label-directories``.
    """
    root = Path(path)
    if not root.exists():
        raise FileNotFoundError(f"corpus path not found: {root}")
    if format == "label-directories":
        return preprocess(read_label_directories(root), config, name=name or root.name)
    if format == "dtm-files":
        return read_dtm_files(root, name=name)
    raise ValueError(f"unknown corpus format {format!r}")


def _fmt_count(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_dtm_files(corpus: Corpus, path: str | Path) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    coo = corpus.dtm.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{corpus.m} {corpus.n} {coo.nnz}"]
    lines += [f"{coo.row[t]} {coo.col[t]} {_fmt_count(coo.data[t])}" for t in order]
    (root / "matrix.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (root / "vocab.txt").write_text("".join(t + "\n" for t in corpus.vocabulary), encoding="utf-8")
    (root / "labels.txt").write_text(
        "".join(f"{d}\t{c}\n" for d, c in zip(corpus.doc_ids, corpus.labels)), encoding="utf-8"
    )
    return root


def tfidf_weight(corpus: Corpus | sp.spmatrix | np.ndarray) -> sp.csr_matrix:
    """Weight a document-term count matrix.

    ``tfidf(w, d) = n(w, d) / sum_d' n(w, d') * log(m / df(w))`` with the
    natural logarithm. Note the term frequency is normalized over the term's
    column, not over the document.
    """
    dtm = corpus.dtm if isinstance(corpus, Corpus) else sp.csr_matrix(corpus, dtype=np.float64)
    m = dtm.shape[0]
    col_sums = np.asarray(dtm.sum(axis=0)).ravel()
    if np.any(col_sums <= 0):
        bad = np.flatnonzero(col_sums <= 0)
        raise CorpusError(f"terms with zero total count: columns {bad[:10].tolist()}")
    df = np.diff(sp.csc_matrix(dtm).indptr).astype(np.float64)
    idf = np.log(m / df)
    weighted = sp.csr_matrix(dtm @ sp.diags(idf / col_sums))
    weighted.eliminate_zeros()
    return weighted


def _letters(i: int, width: int = 3) -> str:
    """Fixed-width base-26 code, so synthetic terms survive tokenization and sort by index."""
    out = []
    for _ in range(width):
        i, r = divmod(i, 26)
        out.append(chr(ord("a") + r))
    if i:
        raise ValueError("index too large for a synthetic term code")
    return "".join(reversed(out))


def generate_synthetic_corpus(
    k: int = 3,
    docs_per_class: int = 50,
    terms_per_class: int = 20,
    noise: float = 0.1,
    seed: int = 0,
    doc_length: int = 60,
    name: str = "synthetic",
) -> Corpus:
    """Corpus with one disjoint vocabulary block per class.

    Each document has ``doc_length`` tokens: ``round(noise * doc_length)``
    drawn uniformly from the whole vocabulary, the rest uniformly from the
    document's class block.
    """
    if k < 1 or docs_per_class < 1 or terms_per_class < 2:
        raise ValueError("need k >= 1, docs_per_class >= 1, terms_per_class >= 2")
    if not 0.0 <= noise < 1.0:
        raise ValueError("noise must lie in [0, 1)")
    if doc_length < 1:
        raise ValueError("doc_length must be >= 1")
    rng = np.random.default_rng(seed)
    n = k * terms_per_class
    m = k * docs_per_class
    n_noise = int(round(noise * doc_length))
    counts = np.zeros((m, n))
    labels = []
    for i in range(m):
        c = i // docs_per_class
        block = rng.integers(c * terms_per_class, (c + 1) * terms_per_class, size=doc_length - n_noise)
        extra = rng.integers(0, n, size=n_noise)
        np.add.at(counts[i], np.concatenate([block, extra]), 1.0)
        labels.append(f"class{c:02d}")
    vocab = [f"c{_letters(c)}w{_letters(j)}" for c in range(k) for j in range(terms_per_class)]
    doc_ids = [f"d{i:06d}" for i in range(m)]
    return Corpus(dtm=sp.csr_matrix(counts), vocabulary=vocab, labels=labels, doc_ids=doc_ids, name=name)


def reconstruct_text(corpus: Corpus, row: int) -> str:
    """Space-joined tokens of one document, in vocabulary order."""
    vec = corpus.dtm.getrow(row)
    return " ".join(
        " ".join([corpus.vocabulary[j]] * int(round(v))) for j, v in zip(vec.indices, vec.data)
    )

