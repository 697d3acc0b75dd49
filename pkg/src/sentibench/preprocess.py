"""Review text cleaning: case folding, regex cleansing, slang expansion, tokenizing.

The stages always run in this order::

    case_fold -> cleanse -> whitespace split -> slang map -> length filter

Slang keys are looked up before the length filter so one-letter abbreviations
(``g`` for ``tidak``) still expand.
"""

from __future__ import annotations

import re
import string
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from sklearn.base import BaseEstimator, TransformerMixin

MIN_TOKEN_LEN = 2

_URL_RE = re.compile(r"(?:https?://|www\.)\S*")
_TAG_RE = re.compile(r"<[^<>]*>")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
_ASCII_PUNCT = frozenset(string.punctuation)

SlangDict = Mapping[str, str]


class SlangParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class TokenDoc:
    tokens: tuple
    label: int

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))


def case_fold(text: str) -> str:
    return text.lower()


@lru_cache(maxsize=None)
def _is_punct(ch: str) -> bool:
    return ch in _ASCII_PUNCT or unicodedata.category(ch).startswith("P")


@lru_cache(maxsize=None)
def _is_digit(ch: str) -> bool:
    return unicodedata.category(ch) == "Nd" or ch.isdigit()


def cleanse(text: str) -> str:
    """Blank out URLs, HTML tags, mentions, hashtags, punctuation and digits.

    Every removed span becomes a single space so neighbouring words never
    merge; leading/trailing whitespace is stripped, interior runs are left
    for the tokenizer.
    """
    for pattern in (_URL_RE, _TAG_RE, _MENTION_RE, _HASHTAG_RE):
        text = pattern.sub(" ", text)
    text = "".join(" " if _is_punct(c) else c for c in text)
    text = "".join(" " if _is_digit(c) else c for c in text)
    return text.strip()


def normalize_slang(tokens: Iterable[str], slang: SlangDict) -> list[str]:
    # single pass: a replacement is never looked up again
    return [slang.get(t, t) for t in tokens]


def tokenize_filter(text: str) -> list[str]:
    return [t for t in text.split() if len(t) >= MIN_TOKEN_LEN]


def preprocess_text(text: str, slang: SlangDict) -> list[str]:
    units = cleanse(case_fold(text)).split()
    return [t for t in normalize_slang(units, slang) if len(t) >= MIN_TOKEN_LEN]


def run_pipeline(text: str, slang: SlangDict, label: int) -> TokenDoc:
    return TokenDoc(preprocess_text(text, slang), label)


def _check_entry(key: str, value: str, lineno: int) -> None:
    for part, name in ((key, "key"), (value, "value")):
        if not part:
            raise SlangParseError(lineno, f"empty {name}")
        if any(c.isspace() for c in part):
            raise SlangParseError(lineno, f"{name} {part!r} contains whitespace")


def parse_slang_lines(lines: Iterable[str]) -> SlangDict:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise SlangParseError(lineno, "expected 'informal<TAB>canonical'")
        key, value = fields[0].strip().lower(), fields[1].strip().lower()
        _check_entry(key, value, lineno)
        entries[key] = value
    return MappingProxyType(entries)


def load_slang_dict(path) -> SlangDict:
    """Load a TSV slang dictionary; later duplicates override earlier ones."""
    with open(Path(path), encoding="utf-8") as fh:
        return parse_slang_lines(fh)


def default_slang_dict() -> SlangDict:
    text = resources.files("sentibench").joinpath("data/slang_id.tsv").read_text("utf-8")
    return parse_slang_lines(text.splitlines())


def resolve_slang(slang) -> SlangDict:
    """``None`` -> bundled dictionary, mapping -> itself, anything else -> path."""
    if slang is None:
        return default_slang_dict()
    if isinstance(slang, Mapping):
        return slang
    return load_slang_dict(slang)


class TextPreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer turning raw strings into token lists.

    Parameters
    ----------
    slang : mapping, path or None
        Slang dictionary; ``None`` uses the bundled illustrative list.
    """

    def __init__(self, slang=None):
        self.slang = slang

    def fit(self, X, y=None):
        self.slang_ = resolve_slang(self.slang)
        return self

    def transform(self, X):
        slang = getattr(self, "slang_", None)
        if slang is None:
            slang = resolve_slang(self.slang)
        return [preprocess_text(text, slang) for text in X]
