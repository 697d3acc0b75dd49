"""Token vocabulary and batch encoding."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

import numpy as np

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"


@dataclass(frozen=True)
class Vocabulary:
    id_to_token: tuple

    def __post_init__(self):
        object.__setattr__(self, "token_to_id", {t: i for i, t in enumerate(self.id_to_token)})

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def __len__(self):
        return self.size

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.id_to_token).encode("utf-8")).hexdigest()


def build_vocab(token_lists, cap: int = 13600) -> Vocabulary:
    """Most frequent tokens first (ties: lexicographic), ``cap`` ids including PAD/UNK."""
    if cap < 2:
        raise ValueError("cap must leave room for PAD and UNK")
    counts = Counter()
    n_docs = 0
    for tokens in token_lists:
        counts.update(tokens)
        n_docs += 1
    if n_docs == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: cap - 2]
    return Vocabulary((PAD_TOKEN, UNK_TOKEN) + tuple(t for t, _ in ranked))


def encode(tokens, vocab: Vocabulary, max_len: int = 128) -> np.ndarray:
    """Ids of the first ``max_len`` tokens; an empty document becomes ``[UNK]``."""
    ids = [vocab.lookup(t) for t in list(tokens)[:max_len]]
    return np.array(ids or [UNK], dtype=np.int64)


def pad_batch(encoded: list) -> tuple[np.ndarray, np.ndarray]:
    """Stack id arrays into a PAD-filled (B, T) matrix plus lengths."""
    lengths = np.array([len(e) for e in encoded], dtype=np.int64)
    T = int(lengths.max()) if len(encoded) else 1
    ids = np.full((len(encoded), T), PAD, dtype=np.int64)
    for row, e in enumerate(encoded):
        ids[row, :len(e)] = e
    return ids, lengths
