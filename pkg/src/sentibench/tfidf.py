"""TF-IDF features over unigrams/bigrams and a sparse-preserving MinMax scaler.

Defaults: ``max_features=5000, ngram_range=(1, 2), min_df=3, max_df=0.90,
sublinear_tf=True``. IDF is the smoothed ``ln((1 + N) / (1 + df)) + 1`` and
rows are L2-normalised.
"""

from __future__ import annotations

import json
import math
from collections import Counter

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_token_lists, check_matrix

FORMAT_VERSION = 1


def extract_ngrams(tokens, ngram_range=(1, 2)) -> list[str]:
    lo, hi = ngram_range
    grams = []
    for n in range(lo, hi + 1):
        grams.extend(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return grams


def _df_threshold(value, n_docs: int) -> float:
    # ints are absolute counts, floats are proportions of the corpus
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return float(value)
    return float(value) * n_docs


class TfidfVectorizer(BaseEstimator, TransformerMixin):
    """Document-frequency filtered TF-IDF vectorizer producing CSR matrices.

    Candidate terms pass when ``min_df <= df <= max_df``; of those the
    ``max_features`` with the highest df survive (ties: lexicographically
    smaller term first). Columns are ordered lexicographically.

    Parameters
    ----------
    max_features : int or None
    ngram_range : tuple of int
    min_df, max_df : int or float
        Integers are document counts, floats are fractions of the corpus.
        Both bounds are inclusive.
    sublinear_tf : bool
        Use ``1 + ln(count)`` instead of the raw count.
    """

    def __init__(self, max_features=5000, ngram_range=(1, 2), min_df=3,
                 max_df=0.90, sublinear_tf=True):
        self.max_features = max_features
        self.ngram_range = ngram_range
        self.min_df = min_df
        self.max_df = max_df
        self.sublinear_tf = sublinear_tf

    def fit(self, X, y=None):
        docs = as_token_lists(X)
        n_docs = len(docs)
        if n_docs == 0:
            raise ValueError("cannot fit TF-IDF on an empty corpus")
        df = Counter()
        for tokens in docs:
            df.update(set(extract_ngrams(tokens, self.ngram_range)))
        lo = _df_threshold(self.min_df, n_docs)
        hi = _df_threshold(self.max_df, n_docs)
        kept = [(term, c) for term, c in df.items() if lo <= c <= hi]
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        if self.max_features is not None:
            kept = kept[: self.max_features]
        terms = sorted(term for term, _ in kept)
        self.vocabulary_ = {term: j for j, term in enumerate(terms)}
        dfs = np.array([df[t] for t in terms], dtype=np.float64)
        self.idf_ = np.log((1.0 + n_docs) / (1.0 + dfs)) + 1.0
        self.n_docs_ = n_docs
        return self

    @property
    def n_features_out_(self) -> int:
        return len(self.vocabulary_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        names = [None] * len(self.vocabulary_)
        for term, j in self.vocabulary_.items():
            names[j] = term
        return np.array(names, dtype=object)

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        docs = as_token_lists(X)
        vocab, idf = self.vocabulary_, self.idf_
        indptr, indices, values = [0], [], []
        for tokens in docs:
            counts = Counter(vocab[g] for g in extract_ngrams(tokens, self.ngram_range)
                             if g in vocab)
            cols = sorted(counts)
            tf = [1.0 + math.log(counts[j]) if self.sublinear_tf else float(counts[j])
                  for j in cols]
            row = np.array(tf, dtype=np.float64) * idf[cols]
            norm = math.sqrt(float(row @ row)) if row.size else 0.0
            if norm > 0:
                row = row / norm
            indices.extend(cols)
            values.extend(row.tolist())
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.array(values, dtype=np.float64), np.array(indices, dtype=np.int64),
             np.array(indptr, dtype=np.int64)),
            shape=(len(docs), len(vocab)))

    def to_dict(self) -> dict:
        check_is_fitted(self, "vocabulary_")
        return {
            "version": FORMAT_VERSION,
            "config": {
                "max_features": self.max_features,
                "ngram_range": list(self.ngram_range),
                "min_df": self.min_df,
                "max_df": self.max_df,
                "sublinear_tf": self.sublinear_tf,
            },
            "n_docs": self.n_docs_,
            "vocabulary": self.vocabulary_,
            "idf": self.idf_.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TfidfVectorizer":
        if payload.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported TF-IDF model version {payload.get('version')!r}")
        cfg = dict(payload["config"])
        cfg["ngram_range"] = tuple(cfg["ngram_range"])
        vec = cls(**cfg)
        vec.vocabulary_ = {k: int(v) for k, v in payload["vocabulary"].items()}
        vec.idf_ = np.asarray(payload["idf"], dtype=np.float64)
        vec.n_docs_ = int(payload.get("n_docs", 0))
        return vec


class SparseMinMaxScaler(BaseEstimator, TransformerMixin):
    """Column-wise division by the fitted column maximum.

    For non-negative sparse data the column minimum is zero, so MinMax
    scaling is just ``x / max``. All-zero columns pass through; values above
    the fitted max are not clipped.
    """

    def fit(self, X, y=None):
        X = check_matrix(X)
        if sp.issparse(X):
            col_max = np.asarray(X.max(axis=0).todense()).ravel()
        else:
            col_max = X.max(axis=0) if X.shape[0] else np.zeros(X.shape[1])
        self.col_max_ = np.maximum(col_max, 0.0)
        return self

    def transform(self, X):
        check_is_fitted(self, "col_max_")
        X = check_matrix(X, n_features=self.col_max_.shape[0])
        scale = np.where(self.col_max_ > 0, self.col_max_, 1.0)
        if sp.issparse(X):
            out = X.copy()
            out.data = out.data / scale[out.indices]
            return out
        return X / scale


def fit(corpus, **config) -> TfidfVectorizer:
    return TfidfVectorizer(**config).fit(corpus)


def transform(model: TfidfVectorizer, docs):
    return model.transform(docs)


def fit_minmax(X) -> SparseMinMaxScaler:
    return SparseMinMaxScaler().fit(X)


def apply_minmax(scaler: SparseMinMaxScaler, X):
    return scaler.transform(X)


def save_model(path, vectorizer: TfidfVectorizer, scaler: SparseMinMaxScaler | None = None):
    payload = vectorizer.to_dict()
    if scaler is not None:
        payload["col_max"] = scaler.col_max_.tolist()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    vec = TfidfVectorizer.from_dict(payload)
    scaler = None
    if "col_max" in payload:
        scaler = SparseMinMaxScaler()
        scaler.col_max_ = np.asarray(payload["col_max"], dtype=np.float64)
    return vec, scaler
