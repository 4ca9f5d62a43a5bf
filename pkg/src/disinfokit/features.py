"""Model input views: token ids, mixed word+username ids, SVD components.

Three views feed the classifier:

* ``text_ids`` — tweet words encoded against a vocabulary,
* ``mixed_ids`` — words followed by '@'-prefixed retweeter usernames,
  encoded against a vocabulary that includes usernames,
* ``svd_vec`` — the tweet's row of the retweeter TF-IDF matrix
  projected onto the top singular directions.

The TF-IDF uses the smoothed idf ln((1+N)/(1+df)) + 1 with L2-normalized
rows; the truncated SVD is a seeded randomized range finder (Gaussian
test matrix, QR re-orthonormalization, subspace power iterations)
followed by an exact SVD of the small projected matrix.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus, Tweet
from .store import load_arrays, save_arrays
from .tokens import tokenize

USERNAME_PREFIX = "@"
PAD_ID = 0


class FeatureError(Exception):
    pass


@dataclass(frozen=True)
class Vocab:
    """Token -> id map with id 0 reserved for unknown/padding.

    Ids are dense, assigned by descending corpus frequency then
    lexicographic order; usernames carry a '@' prefix so they can never
    collide with text words.
    """

    token_to_id: dict[str, int]
    min_freq: int
    includes_usernames: bool

    def __len__(self) -> int:
        return len(self.token_to_id) + 1  # reserved id 0

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, PAD_ID)

    def is_username(self, token: str) -> bool:
        return token.startswith(USERNAME_PREFIX)


@dataclass(frozen=True)
class TfIdfMatrix:
    """Row-per-tweet TF-IDF over retweeter usernames, rows L2-normalized."""

    matrix: sparse.csr_matrix  # shape (n_tweets, n_usernames)
    columns: tuple[str, ...]  # first-appearance order
    idf: np.ndarray  # per-column idf, aligned with `columns`


@dataclass(frozen=True)
class SvdModel:
    """Truncated SVD basis with the column registry needed for projection."""

    k: int
    singular_values: np.ndarray  # (k,), non-increasing
    basis: np.ndarray  # (n_columns, k), orthonormal right singular vectors
    columns: tuple[str, ...]


@dataclass(frozen=True)
class FeatureBundle:
    """Per-tweet model input; lengths are fixed by the encoding config."""

    tweet_id: str
    text_ids: tuple[int, ...]
    mixed_ids: tuple[int, ...]
    svd_vec: np.ndarray
    sentiment_vec: Optional[np.ndarray] = None
    label: Optional[int] = None


def build_vocab(corpus: Corpus, min_freq: int = 1, include_usernames: bool = True) -> Vocab:
    """Vocabulary of words (and '@'-prefixed retweeter usernames) by frequency.

    A token enters the vocabulary when its corpus frequency reaches
    `min_freq`; username frequency counts retweeter-list occurrences.
    """
    if min_freq < 1:
        raise FeatureError("min_freq must be >= 1")
    counts: Counter = Counter()
    for tweet in corpus:
        counts.update(tokenize(tweet.text))
        if include_usernames:
            counts.update(USERNAME_PREFIX + u for u in tweet.retweeters)
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_freq),
        key=lambda tok: (-counts[tok], tok),
    )
    return Vocab(
        token_to_id={tok: i + 1 for i, tok in enumerate(kept)},
        min_freq=min_freq,
        includes_usernames=include_usernames,
    )


def _fit_length(ids: list[int], max_len: int) -> tuple[int, ...]:
    ids = ids[:max_len]
    return tuple(ids + [PAD_ID] * (max_len - len(ids)))


def encode(tweet: Tweet, vocab: Vocab, max_len: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Encode one tweet into (text_ids, mixed_ids), padded/truncated.

    Tokenization matches the itemset transactions but keeps stopwords,
    duplicates and order; the mixed view appends '@'-prefixed retweeter
    ids after the words. Out-of-vocabulary tokens map to 0.
    """
    if max_len < 1:
        raise FeatureError("max_len must be >= 1")
    words = tokenize(tweet.text)
    text_ids = [vocab.id_of(tok) for tok in words]
    mixed_ids = text_ids + [vocab.id_of(USERNAME_PREFIX + u) for u in tweet.retweeters]
    return _fit_length(text_ids, max_len), _fit_length(mixed_ids, max_len)


def decode(ids: Sequence[int], vocab: Vocab) -> list[str]:
    """Inverse of `encode` for in-vocabulary ids; drops padding."""
    inverse = {i: tok for tok, i in vocab.token_to_id.items()}
    return [inverse[i] for i in ids if i != PAD_ID]


def tfidf(corpus: Corpus) -> TfIdfMatrix:
    """TF-IDF of the retweeter incidence: tf is the per-tweet username
    count, idf = ln((1+N)/(1+df)) + 1, rows L2-normalized.

    Columns appear in first-appearance order over the corpus.
    """
    if not any(tweet.retweeters for tweet in corpus):
        raise FeatureError("tfidf needs at least one tweet with retweeters")

    columns: list[str] = []
    col_index: dict[str, int] = {}
    rows, cols, tfs = [], [], []
    df: Counter = Counter()
    for r, tweet in enumerate(corpus):
        counts = Counter(tweet.retweeters)
        for user, tf in counts.items():
            if user not in col_index:
                col_index[user] = len(columns)
                columns.append(user)
            rows.append(r)
            cols.append(col_index[user])
            tfs.append(float(tf))
        df.update(counts.keys())

    n = len(corpus)
    idf = np.array([np.log((1.0 + n) / (1.0 + df[u])) + 1.0 for u in columns])
    data = np.array(tfs) * idf[np.array(cols, dtype=int)]
    mat = sparse.csr_matrix((data, (rows, cols)), shape=(n, len(columns)))

    norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    mat = sparse.diags(scale) @ mat
    return TfIdfMatrix(matrix=mat.tocsr(), columns=tuple(columns), idf=idf)


def tfidf_row(tweet: Tweet, tfidf_model: TfIdfMatrix) -> dict[str, float]:
    """TF-IDF-transform one tweet against a fitted matrix's columns.

    Unknown usernames are dropped; the row is L2-normalized like the
    training rows.
    """
    col_index = {u: i for i, u in enumerate(tfidf_model.columns)}
    weights = {}
    for user, tf in Counter(tweet.retweeters).items():
        if user in col_index:
            weights[user] = float(tf) * float(tfidf_model.idf[col_index[user]])
    norm = np.sqrt(sum(w * w for w in weights.values()))
    if norm > 0:
        weights = {u: w / norm for u, w in weights.items()}
    return weights


def truncated_svd(matrix, k: int, seed: int = 0, oversample: int = 10,
                  power_iters: int = 4) -> SvdModel:
    """Randomized truncated SVD, deterministic for a fixed seed.

    Sketches the range with a seeded Gaussian test matrix, re-orthonormalizes
    with QR through `power_iters` subspace iterations, then takes the exact
    SVD of the small projected matrix. Accepts a TfIdfMatrix, a scipy sparse
    matrix, or a dense array.
    """
    columns: tuple[str, ...] = ()
    if isinstance(matrix, TfIdfMatrix):
        columns = matrix.columns
        matrix = matrix.matrix
    if sparse.issparse(matrix):
        a = matrix.tocsr()
        n_rows, n_cols = a.shape
        dense = False
    else:
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2:
            raise FeatureError("matrix must be 2-dimensional")
        n_rows, n_cols = a.shape
        dense = True
    if not 1 <= k <= min(n_rows, n_cols):
        raise FeatureError(f"k={k} out of range for a {n_rows}x{n_cols} matrix")
    if not columns:
        columns = tuple(f"c{i}" for i in range(n_cols))

    frob = np.sqrt((a.multiply(a)).sum()) if not dense else float(np.linalg.norm(a))
    if frob == 0:
        raise FeatureError("cannot factor an all-zero matrix")

    rng = np.random.default_rng(seed)
    sketch = min(k + oversample, n_cols)
    omega = rng.standard_normal((n_cols, sketch))
    y = a @ omega
    q, _ = np.linalg.qr(y)
    for _ in range(power_iters):
        z = a.T @ q
        q, _ = np.linalg.qr(z)
        y = a @ q
        q, _ = np.linalg.qr(y)

    b = np.asarray((a.T @ q).T)
    _, sigma, vt = np.linalg.svd(b, full_matrices=False)
    return SvdModel(
        k=k,
        singular_values=sigma[:k].copy(),
        basis=vt[:k].T.copy(),
        columns=columns,
    )


def project(model: SvdModel, row: Mapping[str, float]) -> np.ndarray:
    """Project a sparse row (column name -> value) onto the SVD basis.

    Unknown column names are dropped; a row of only unknown names (or an
    empty row) projects to the zero vector.
    """
    col_index = {u: i for i, u in enumerate(model.columns)}
    vec = np.zeros(model.k)
    for name, value in row.items():
        i = col_index.get(name)
        if i is not None:
            vec += value * model.basis[i]
    return vec


def project_matrix(model: SvdModel, matrix) -> np.ndarray:
    """Project every row of a matrix aligned with the model's columns."""
    mat = matrix.matrix if isinstance(matrix, TfIdfMatrix) else matrix
    return np.asarray(mat @ model.basis)


def save_svd_model(model: SvdModel, path) -> None:
    save_arrays(
        path,
        {"singular_values": model.singular_values, "basis": model.basis},
        meta={"kind": "svd_model", "k": model.k, "columns": list(model.columns)},
    )


def load_svd_model(path) -> SvdModel:
    arrays, meta = load_arrays(path)
    if meta.get("kind") != "svd_model":
        raise FeatureError(f"{path}: not an SVD model artifact")
    return SvdModel(
        k=int(meta["k"]),
        singular_values=arrays["singular_values"],
        basis=arrays["basis"],
        columns=tuple(meta["columns"]),
    )


@dataclass(frozen=True)
class FeatureSet:
    """Stacked feature arrays for a whole corpus, aligned by row."""

    tweet_ids: tuple[str, ...]
    text_ids: np.ndarray  # (n, max_len) int32
    mixed_ids: np.ndarray  # (n, max_len) int32
    svd: np.ndarray  # (n, k) float64
    labels: np.ndarray  # (n,) int8, -1 for unlabeled

    def __len__(self) -> int:
        return len(self.tweet_ids)

    def bundle(self, i: int) -> FeatureBundle:
        label = int(self.labels[i])
        return FeatureBundle(
            tweet_id=self.tweet_ids[i],
            text_ids=tuple(int(x) for x in self.text_ids[i]),
            mixed_ids=tuple(int(x) for x in self.mixed_ids[i]),
            svd_vec=self.svd[i],
            label=None if label < 0 else label,
        )

    def subset(self, indices: Sequence[int]) -> "FeatureSet":
        idx = np.asarray(indices, dtype=int)
        return FeatureSet(
            tweet_ids=tuple(self.tweet_ids[i] for i in idx),
            text_ids=self.text_ids[idx],
            mixed_ids=self.mixed_ids[idx],
            svd=self.svd[idx],
            labels=self.labels[idx],
        )


def build_feature_set(corpus: Corpus, vocab: Vocab, svd_model: SvdModel,
                      tfidf_model: TfIdfMatrix, max_len: int) -> FeatureSet:
    """Encode a whole corpus into stacked arrays for training/evaluation."""
    n = len(corpus)
    text = np.zeros((n, max_len), dtype=np.int32)
    mixed = np.zeros((n, max_len), dtype=np.int32)
    labels = np.full(n, -1, dtype=np.int8)
    for i, tweet in enumerate(corpus):
        t_ids, m_ids = encode(tweet, vocab, max_len)
        text[i] = t_ids
        mixed[i] = m_ids
        if tweet.label is not None:
            labels[i] = tweet.label
    svd = project_matrix(svd_model, tfidf_model)
    return FeatureSet(
        tweet_ids=tuple(t.id for t in corpus),
        text_ids=text,
        mixed_ids=mixed,
        svd=np.asarray(svd, dtype=float),
        labels=labels,
    )


def save_feature_set(fs: FeatureSet, path, meta: Mapping | None = None) -> None:
    save_arrays(
        path,
        {"text_ids": fs.text_ids, "mixed_ids": fs.mixed_ids, "svd": fs.svd, "labels": fs.labels},
        meta={"kind": "feature_set", "tweet_ids": list(fs.tweet_ids), **dict(meta or {})},
    )


def load_feature_set(path) -> FeatureSet:
    arrays, meta = load_arrays(path)
    if meta.get("kind") != "feature_set":
        raise FeatureError(f"{path}: not a feature-set artifact")
    return FeatureSet(
        tweet_ids=tuple(meta["tweet_ids"]),
        text_ids=arrays["text_ids"],
        mixed_ids=arrays["mixed_ids"],
        svd=arrays["svd"],
        labels=arrays["labels"],
    )


def save_vocab(vocab: Vocab, path) -> None:
    doc = {
        "kind": "vocab",
        "min_freq": vocab.min_freq,
        "includes_usernames": vocab.includes_usernames,
        "tokens": vocab.token_to_id,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, sort_keys=True)


def load_vocab(path) -> Vocab:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "vocab":
        raise FeatureError(f"{path}: not a vocabulary artifact")
    return Vocab(
        token_to_id={str(k): int(v) for k, v in doc["tokens"].items()},
        min_freq=int(doc["min_freq"]),
        includes_usernames=bool(doc["includes_usernames"]),
    )
