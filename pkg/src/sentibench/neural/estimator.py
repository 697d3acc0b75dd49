"""Scikit-learn style wrapper around the BiLSTM + attention trainer."""

from __future__ import annotations

import numpy as np
from scipy.special import softmax
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import as_token_lists, check_binary_labels, check_two_classes
from ..corpus_io import stratified_indices
from .checkpoint import load_checkpoint, save_checkpoint
from .model import HyperParams
from .training import predict_logits, train
from .vocab import encode


class BiLSTMAttentionClassifier(ClassifierMixin, BaseEstimator):
    """Two-layer BiLSTM with attention pooling over token sequences.

    ``fit`` takes token lists (or TokenDocs) and labels. A stratified
    ``val_fraction`` of the training data is held out for early stopping.
    Fitted attributes: ``params_``, ``vocab_``, ``history_``, ``best_epoch_``.
    """

    def __init__(self, embed_dim=64, hidden_dim1=128, hidden_dim2=128, head_dim=64,
                 dropout=0.4483, lr=0.0038, weight_decay=0.00107, label_smoothing=7.8e-5,
                 batch_size=128, max_len=128, max_epochs=10, patience=3, vocab_cap=13600,
                 val_fraction=0.1, seed=42, dtype="float32"):
        self.embed_dim = embed_dim
        self.hidden_dim1 = hidden_dim1
        self.hidden_dim2 = hidden_dim2
        self.head_dim = head_dim
        self.dropout = dropout
        self.lr = lr
        self.weight_decay = weight_decay
        self.label_smoothing = label_smoothing
        self.batch_size = batch_size
        self.max_len = max_len
        self.max_epochs = max_epochs
        self.patience = patience
        self.vocab_cap = vocab_cap
        self.val_fraction = val_fraction
        self.seed = seed
        self.dtype = dtype

    def hyperparams(self) -> HyperParams:
        params = self.get_params()
        return HyperParams(**{k: params[k] for k in HyperParams.__dataclass_fields__})

    def fit(self, X, y):
        tokens = as_token_lists(X)
        y = check_binary_labels(y, len(tokens))
        check_two_classes(y)
        fit_idx, val_idx = stratified_indices(y, 1 - self.val_fraction, self.seed)
        result = train([tokens[i] for i in fit_idx], y[fit_idx],
                       [tokens[i] for i in val_idx], y[val_idx],
                       self.hyperparams(), seed=self.seed, dtype=np.dtype(self.dtype))
        self._set_fitted(result.params, result.vocab)
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.best_val_loss_ = result.best_val_loss
        return self

    def _set_fitted(self, params, vocab):
        # checkpoints store float32, so snap weights now to make reloads exact
        self.params_ = {k: v.astype(np.float32).astype(np.dtype(self.dtype))
                        for k, v in params.items()}
        self.vocab_ = vocab
        self.classes_ = np.array([0, 1])

    def _logits(self, X):
        check_is_fitted(self, "params_")
        hp = self.hyperparams()
        encoded = [encode(t, self.vocab_, hp.max_len) for t in as_token_lists(X)]
        return predict_logits(self.params_, hp, encoded)

    def decision_function(self, X):
        logits = self._logits(X)
        return (logits[:, 1] - logits[:, 0]).astype(np.float64)

    def predict_proba(self, X):
        return softmax(self._logits(X).astype(np.float64), axis=1)

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(np.int64)

    def save(self, path, extra: dict | None = None) -> None:
        check_is_fitted(self, "params_")
        save_checkpoint(path, self.params_, self.hyperparams(), self.vocab_, extra)

    @classmethod
    def load(cls, path, dtype="float32") -> "BiLSTMAttentionClassifier":
        params, hp, vocab = load_checkpoint(path, dtype=np.dtype(dtype))
        est = cls(**{**hp.__dict__, "dtype": dtype})
        est._set_fitted(params, vocab)
        return est
