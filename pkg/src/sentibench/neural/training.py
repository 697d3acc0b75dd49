"""Mini-batch training with early stopping, and a seeded random hyperparameter search."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .model import HyperParams, backward, forward, init_params, loss_label_smoothed
from .optim import AdamState, optimizer_step
from .vocab import Vocabulary, build_vocab, encode, pad_batch

log = logging.getLogger(__name__)

HISTORY_FIELDS = ("epoch", "train_loss", "val_loss", "train_acc", "val_acc")


class EarlyStopping:
    """Tracks the best validation loss; ``update`` returns True when training should stop."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        if val_loss < self.best_loss:
            self.best_loss, self.best_epoch, self.wait = val_loss, epoch, 0
            return False
        self.wait += 1
        return self.wait >= self.patience


@dataclass
class TrainResult:
    params: dict
    vocab: Vocabulary
    hp: HyperParams
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = math.inf


def predict_logits(params, hp: HyperParams, encoded: list, batch_size: int | None = None):
    batch_size = batch_size or hp.batch_size
    out = []
    for start in range(0, len(encoded), batch_size):
        ids, lengths = pad_batch(encoded[start:start + batch_size])
        logits, _, _ = forward(params, ids, lengths, hp, train=False)
        out.append(logits)
    if not out:
        return np.zeros((0, 2), dtype=params["embedding"].dtype)
    return np.concatenate(out, axis=0)


def evaluate_encoded(params, hp, encoded, labels) -> tuple[float, float]:
    logits = predict_logits(params, hp, encoded)
    loss, _ = loss_label_smoothed(logits, labels, hp.label_smoothing)
    acc = float((logits.argmax(axis=1) == labels).mean())
    return loss, acc


def train(train_tokens, train_labels, val_tokens, val_labels, hp: HyperParams = HyperParams(),
          seed: int = 42, vocab: Vocabulary | None = None, dtype=np.float32) -> TrainResult:
    """Train from scratch, keeping the parameters of the best validation-loss epoch."""
    train_labels = np.asarray(train_labels, dtype=np.int64)
    val_labels = np.asarray(val_labels, dtype=np.int64)
    if len(val_labels) == 0:
        raise ValueError("early stopping needs a non-empty validation set")
    vocab = vocab or build_vocab(train_tokens, hp.vocab_cap)
    enc_train = [encode(t, vocab, hp.max_len) for t in train_tokens]
    enc_val = [encode(t, vocab, hp.max_len) for t in val_tokens]

    init_seed, shuffle_seed, dropout_seed = np.random.SeedSequence(seed).generate_state(3)
    params = init_params(hp, vocab.size, seed=int(init_seed), dtype=dtype)
    shuffle_rng = np.random.default_rng(int(shuffle_seed))
    dropout_rng = np.random.default_rng(int(dropout_seed))
    state = AdamState()
    stopper = EarlyStopping(hp.patience)
    best = {k: v.copy() for k, v in params.items()}
    history = []
    n = len(enc_train)
    for epoch in range(1, hp.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            ids, lengths = pad_batch([enc_train[i] for i in idx])
            y = train_labels[idx]
            logits, _, cache = forward(params, ids, lengths, hp, train=True, rng=dropout_rng)
            loss, dlogits = loss_label_smoothed(logits, y, hp.label_smoothing)
            grads = backward(params, cache, dlogits, hp)
            optimizer_step(params, grads, state, hp.lr, hp.weight_decay)
            loss_sum += loss * len(idx)
            correct += int((logits.argmax(axis=1) == y).sum())
        val_loss, val_acc = evaluate_encoded(params, hp, enc_val, val_labels)
        row = {"epoch": epoch, "train_loss": loss_sum / max(n, 1),
               "val_loss": val_loss, "train_acc": correct / max(n, 1), "val_acc": val_acc}
        history.append(row)
        log.info("epoch %d train_loss %.4f val_loss %.4f val_acc %.4f",
                 epoch, row["train_loss"], val_loss, val_acc)
        stop = stopper.update(epoch, val_loss if math.isfinite(val_loss) else math.inf)
        if stopper.best_epoch == epoch:
            best = {k: v.copy() for k, v in params.items()}
        if stop:
            break
    return TrainResult(best, vocab, hp, history, stopper.best_epoch, stopper.best_loss)


# random search ---------------------------------------------------------------

@dataclass(frozen=True)
class SearchSpace:
    lr: tuple = (1e-4, 1e-2)
    weight_decay: tuple = (1e-5, 1e-2)
    label_smoothing: tuple = (1e-5, 1e-1)
    dropout: tuple = (0.1, 0.6)
    hidden_dim1: tuple = (64, 128, 256)

    def __post_init__(self):
        for name in ("lr", "weight_decay", "label_smoothing"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} bounds must satisfy 0 < low <= high")
        lo, hi = self.dropout
        if not 0 <= lo <= hi < 1:
            raise ValueError("dropout bounds must lie in [0, 1)")
        if not self.hidden_dim1:
            raise ValueError("hidden_dim1 needs at least one choice")


def sample_trials(space: SearchSpace, n_trials: int, seed: int) -> list[dict]:
    """Log-uniform lr/weight_decay/label_smoothing, uniform dropout, categorical hidden_dim1."""
    rng = np.random.default_rng(seed)

    def log_uniform(bounds):
        lo, hi = bounds
        return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))

    trials = []
    for _ in range(n_trials):
        trials.append({
            "lr": log_uniform(space.lr),
            "weight_decay": log_uniform(space.weight_decay),
            "label_smoothing": log_uniform(space.label_smoothing),
            "dropout": float(rng.uniform(*space.dropout)),
            "hidden_dim1": int(space.hidden_dim1[rng.integers(len(space.hidden_dim1))]),
        })
    return trials


@dataclass
class SearchResult:
    best_hp: HyperParams
    best_trial: int
    table: list


def run_trials(configs: list[dict], train_tokens, train_labels, val_tokens, val_labels,
               base_hp: HyperParams = HyperParams(), budget: int = 3, seed: int = 42,
               dtype=np.float32) -> SearchResult:
    """Train every configuration for at most ``budget`` epochs and rank by val loss."""
    vocab = build_vocab(train_tokens, base_hp.vocab_cap)
    table = []
    for k, cfg in enumerate(configs):
        hp = replace(base_hp, max_epochs=budget, **cfg)
        result = train(train_tokens, train_labels, val_tokens, val_labels, hp,
                       seed=seed + k, vocab=vocab, dtype=dtype)
        val_acc = next((r["val_acc"] for r in result.history
                        if r["epoch"] == result.best_epoch), float("nan"))
        table.append({"trial": k, **cfg, "val_loss": result.best_val_loss,
                      "best_epoch": result.best_epoch, "val_acc": val_acc})
        log.info("trial %d val_loss %.4f", k, result.best_val_loss)
    losses = [r["val_loss"] if math.isfinite(r["val_loss"]) else math.inf for r in table]
    best = int(np.argmin(losses))
    best_cfg = {k: table[best][k] for k in configs[best]}
    return SearchResult(replace(base_hp, **best_cfg), best, table)


def random_search(train_tokens, train_labels, val_tokens, val_labels,
                  space: SearchSpace = SearchSpace(), n_trials: int = 13, seed: int = 42,
                  budget: int = 3, base_hp: HyperParams = HyperParams(),
                  dtype=np.float32) -> SearchResult:
    configs = sample_trials(space, n_trials, seed)
    return run_trials(configs, train_tokens, train_labels, val_tokens, val_labels,
                      base_hp, budget, seed, dtype)


def hp_to_dict(hp: HyperParams) -> dict:
    return asdict(hp)
