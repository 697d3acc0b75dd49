"""Corpus loading, class histograms and reproducible stratified splits.

Shuffling uses :class:`SplitMix64`, a 64-bit generator whose state update is
``state += 0x9E3779B97F4A7C15`` followed by the usual xor-shift-multiply
finalizer. Index ``j`` for a Fisher-Yates swap at position ``i`` is
``next_u64() % (i + 1)``. Both rules are fixed so any implementation can
reproduce a split bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

_MASK64 = (1 << 64) - 1

LABEL_ALIASES = {"negative": 0, "positive": 1, "0": 0, "1": 1}


class SchemaError(ValueError):
    """A record is missing a declared field."""


class StratificationError(ValueError):
    """The labels cannot be split while keeping every class represented."""


@dataclass(frozen=True)
class RawReview:
    text: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class SplitDataset:
    train: list
    test: list
    seed: int
    train_fraction: Fraction
    train_index: np.ndarray = field(repr=False)
    test_index: np.ndarray = field(repr=False)


class SplitMix64:
    """Tiny deterministic 64-bit PRNG used for every shuffle in the toolkit."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def shuffle(self, items: list) -> list:
        """Fisher-Yates shuffle in place; returns ``items`` for chaining."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]
        return items


def parse_label(value, row: int) -> int:
    if isinstance(value, bool):
        raise ValueError(f"row {row}: unparseable label {value!r}")
    if isinstance(value, (int, np.integer)):
        if value in (0, 1):
            return int(value)
        raise ValueError(f"row {row}: label {value!r} is not 0/1")
    if isinstance(value, float) and value in (0.0, 1.0):
        return int(value)
    key = str(value).strip().lower()
    if key in LABEL_ALIASES:
        return LABEL_ALIASES[key]
    raise ValueError(f"row {row}: unparseable label {value!r}")


def load_corpus(path, format: str | None = None, text_field: str = "text",
                label_field: str = "label") -> list[RawReview]:
    """Read a labelled corpus from CSV (header required) or JSONL.

    ``format`` defaults to the file suffix. Rows are numbered from 1, counting
    data rows only, in error messages.
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".json") else "csv"
    format = format.lower()
    reviews = []
    if format == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row_no, rec in enumerate(reader, start=1):
                reviews.append(_record_to_review(rec, row_no, text_field, label_field))
    elif format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            row_no = 0
            for line in fh:
                if not line.strip():
                    continue
                row_no += 1
                reviews.append(_record_to_review(json.loads(line), row_no,
                                                 text_field, label_field))
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    return reviews


def _record_to_review(rec, row_no, text_field, label_field):
    for name in (text_field, label_field):
        if name not in rec or rec[name] is None:
            raise SchemaError(f"row {row_no}: missing field {name!r}")
    return RawReview(str(rec[text_field]), parse_label(rec[label_field], row_no))


def class_histogram(data) -> dict[int, int]:
    return dict(sorted(Counter(d.label for d in data).items()))


def _as_fraction(p) -> Fraction:
    frac = p if isinstance(p, Fraction) else Fraction(str(p))
    if not 0 < frac < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {p}")
    return frac


def stratified_indices(labels, train_fraction=0.8, seed: int = 42):
    """Sorted (train, test) index arrays for a stratified split of ``labels``.

    Per class, members are shuffled and the first ``floor(p * n_c)`` go to
    train; the shortfall against ``round(p * N)`` is handed out one sample per
    class in label order.
    """
    frac = _as_fraction(train_fraction)
    labels = np.asarray(labels, dtype=np.int64)
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise StratificationError("stratified split needs both classes present")
    rng = SplitMix64(seed)
    members = {c: rng.shuffle(np.flatnonzero(labels == c).tolist()) for c in classes}
    quota = {c: math.floor(frac * len(members[c])) for c in classes}
    remainder = math.floor(frac * len(labels) + Fraction(1, 2)) - sum(quota.values())
    for c in classes:
        if remainder <= 0:
            break
        if quota[c] < len(members[c]):
            quota[c] += 1
            remainder -= 1
    train_idx = np.sort(np.concatenate(
        [np.asarray(members[c][:quota[c]], dtype=np.int64) for c in classes]))
    test_idx = np.sort(np.concatenate(
        [np.asarray(members[c][quota[c]:], dtype=np.int64) for c in classes]))
    return train_idx, test_idx


def stratified_split(data: Sequence[RawReview], train_fraction=0.8,
                     seed: int = 42) -> SplitDataset:
    """Stratified train/test split; both parts keep the original record order."""
    train_idx, test_idx = stratified_indices([d.label for d in data], train_fraction, seed)
    return SplitDataset(
        train=[data[i] for i in train_idx],
        test=[data[i] for i in test_idx],
        seed=seed,
        train_fraction=_as_fraction(train_fraction),
        train_index=train_idx,
        test_index=test_idx,
    )


def write_corpus_csv(reviews, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["text", "label"])
        for r in reviews:
            writer.writerow([r.text, r.label])


# Synthetic keyword corpus ---------------------------------------------------

POSITIVE_KEYWORDS = (
    "bagus mantap puas keren rapi cepat awet suka recommended original "
    "lembut wangi nyaman murah sesuai amanah ramah terbaik memuaskan berkualitas "
    "cantik kuat elegan praktis istimewa senang aman segar empuk jos"
).split()

NEGATIVE_KEYWORDS = (
    "jelek rusak kecewa lambat palsu cacat bau kasar mahal retak "
    "buruk lecet sobek luntur kotor penipu zonk mengecewakan hancur bocor "
    "kusam tipis telat salah patah rapuh kapok parah ribet basi"
).split()

NOISE_TOKENS = (
    "barang produk paket kirim pesan toko seller kurir warna ukuran "
    "harga bahan kemasan box plastik baju sepatu tas celana kaos "
    "hari minggu kemarin tadi sudah belum juga lagi saja memang "
    "ini itu yang dan atau dengan untuk dari pada ke "
    "saya aku kami kita dia mereka beli order datang sampai buka "
    "pakai coba lihat cek foto video stok ready size model varian"
).split()

# slang spellings the default dictionary knows how to expand
_SLANG_DECOYS = {"banget": "bgt", "sangat": "sgt", "tidak": "gk", "sudah": "udh",
                 "yang": "yg", "untuk": "utk"}


def make_keyword_corpus(n_docs: int = 2000, noise_fraction: float = 0.2,
                        seed: int = 7) -> list[RawReview]:
    """Balanced synthetic reviews with disjoint positive/negative keywords.

    Each document draws 6 to 20 tokens; a ``noise_fraction`` share of them
    comes from a shared neutral vocabulary and the rest from the class
    keyword list (Zipf-like weights). Surface noise exercises the cleaning
    pipeline: random case, punctuation, digits, URLs, mentions and slang.
    """
    rng = np.random.default_rng(seed)

    def zipf(n):
        w = 1.0 / np.arange(1, n + 1)
        return w / w.sum()

    pos_w, neg_w = zipf(len(POSITIVE_KEYWORDS)), zipf(len(NEGATIVE_KEYWORDS))
    noise = NOISE_TOKENS + list(_SLANG_DECOYS)
    out = []
    labels = np.array([i % 2 for i in range(n_docs)])
    rng.shuffle(labels)
    for label in labels.tolist():
        length = int(rng.integers(6, 21))
        words = []
        for _ in range(length):
            if rng.random() < noise_fraction:
                w = noise[rng.integers(len(noise))]
                w = _SLANG_DECOYS.get(w, w) if rng.random() < 0.5 else w
            elif label == 1:
                w = POSITIVE_KEYWORDS[rng.choice(len(POSITIVE_KEYWORDS), p=pos_w)]
            else:
                w = NEGATIVE_KEYWORDS[rng.choice(len(NEGATIVE_KEYWORDS), p=neg_w)]
            r = rng.random()
            if r < 0.1:
                w = w.upper()
            elif r < 0.2:
                w = w.capitalize()
            if rng.random() < 0.08:
                w += rng.choice(["!", "!!", ".", ",", "?"])
            words.append(w)
        extra = rng.random()
        if extra < 0.05:
            words.append("https://toko.example/p/" + str(rng.integers(1000)))
        elif extra < 0.10:
            words.insert(0, "@seller" + str(rng.integers(100)))
        elif extra < 0.15:
            words.append(str(rng.integers(1, 99)) + "x")
        out.append(RawReview(" ".join(words), label))
    return out
