"""Glue shared by the command line: document loading, trainer registry, model bundles."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np
from sklearn.pipeline import Pipeline

from .corpus_io import load_corpus, parse_label
from .gbdt import GbdtClassifier, GbdtModel
from .linear_models import (LinearModel, LinearSVMClassifier,
                            LogisticRegressionClassifier)
from .preprocess import TokenDoc, preprocess_text
from .tfidf import SparseMinMaxScaler, TfidfVectorizer

ML_MODELS = ("lr", "svm", "gbdt")
DISPLAY_NAMES = {
    "lr": "Logistic Regression",
    "svm": "SVM (Linear Kernel)",
    "gbdt": "Gradient Boosting (hist)",
    "dl": "BiLSTM + Attention",
}
BUNDLE_FORMAT = "sentibench-ml"
EMPTY_FLAG = "empty-after-preprocessing"


def bundled_corpus_path() -> Path:
    return Path(str(resources.files("sentibench").joinpath("data/synthetic_reviews.csv")))


def load_docs(path, slang, text_field="text", label_field="label", format=None) -> list[TokenDoc]:
    """Raw corpora are cleaned with ``slang``; JSONL records holding ``tokens`` are re-cleaned
    from their joined tokens, which leaves already-clean tokens unchanged."""
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix.lower() in (".jsonl", ".json") else "csv")
    if fmt == "jsonl" and _has_tokens(path):
        docs = []
        with open(path, encoding="utf-8") as fh:
            for row_no, line in enumerate((ln for ln in fh if ln.strip()), start=1):
                rec = json.loads(line)
                label = parse_label(rec.get(label_field, rec.get("label")), row_no)
                docs.append(TokenDoc(preprocess_text(" ".join(rec["tokens"]), slang), label))
        return docs
    reviews = load_corpus(path, fmt, text_field, label_field)
    return [TokenDoc(preprocess_text(r.text, slang), r.label) for r in reviews]


def _has_tokens(path: Path) -> bool:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                return "tokens" in json.loads(line)
    return False


def make_trainer(name: str, seed: int = 42):
    if name == "lr":
        return LogisticRegressionClassifier()
    if name == "svm":
        return LinearSVMClassifier(seed=seed)
    if name == "gbdt":
        return GbdtClassifier()
    raise ValueError(f"unknown model {name!r}; choose from {', '.join(ML_MODELS)}")


def make_featurizer(minmax: bool = True) -> Pipeline:
    steps = [("tfidf", TfidfVectorizer())]
    if minmax:
        steps.append(("minmax", SparseMinMaxScaler()))
    return Pipeline(steps)


def save_ml_bundle(path, name: str, featurizer: Pipeline, trainer, slang) -> None:
    steps = dict(featurizer.named_steps)
    payload = {
        "format": BUNDLE_FORMAT,
        "model": name,
        "slang": dict(slang),
        "tfidf": steps["tfidf"].to_dict(),
        "col_max": steps["minmax"].col_max_.tolist() if "minmax" in steps else None,
        "classifier": trainer.model_.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


class MlPredictor:
    """Scores raw text with a saved TF-IDF + classifier bundle."""

    def __init__(self, payload: dict):
        if payload.get("format") != BUNDLE_FORMAT:
            raise ValueError("not a sentibench ML model bundle")
        self.name = payload["model"]
        self.slang = payload["slang"]
        self.vectorizer = TfidfVectorizer.from_dict(payload["tfidf"])
        self.scaler = None
        if payload.get("col_max") is not None:
            self.scaler = SparseMinMaxScaler()
            self.scaler.col_max_ = np.asarray(payload["col_max"], dtype=np.float64)
        if self.name == "gbdt":
            self.estimator = GbdtClassifier()
            self.estimator.model_ = GbdtModel.from_dict(payload["classifier"])
        else:
            cls = LogisticRegressionClassifier if self.name == "lr" else LinearSVMClassifier
            self.estimator = cls()
            self.estimator.model_ = LinearModel.from_dict(payload["classifier"])
        self.estimator.classes_ = np.array([0, 1])

    @classmethod
    def load(cls, path) -> "MlPredictor":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def features(self, token_lists):
        X = self.vectorizer.transform(token_lists)
        return self.scaler.transform(X) if self.scaler is not None else X

    def scores(self, token_lists) -> np.ndarray:
        """P(positive) for lr/gbdt; the raw margin for the uncalibrated SVM."""
        X = self.features(token_lists)
        if self.name == "svm":
            return self.estimator.decision_function(X)
        return self.estimator.predict_proba(X)[:, 1]

    def predict(self, token_lists) -> np.ndarray:
        return self.estimator.predict(self.features(token_lists))
