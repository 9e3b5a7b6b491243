"""Question-text preparation: tokenization, keyword extraction, background text.

The background text is the question with its keywords removed, token by token,
preserving order and casing. Keyword extraction is pluggable; the shipped
default ranks tokens by weights from a lexicon file (UTF-8 lines of
``term<TAB>weight``, ``#`` comments allowed), and a pass-through extractor
accepts an explicit keyword list, e.g. from a CLI flag.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Protocol

from .errors import FormatError

_STRIP_CHARS = set(string.punctuation)


@dataclass(frozen=True)
class Token:
    """A whitespace-delimited word with surrounding punctuation stripped.

    start/end give the character span of the stripped text in the source string.
    """

    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, strip leading/trailing punctuation, drop empties."""
    tokens = []
    pos = 0
    length = len(text)
    while pos < length:
        if text[pos].isspace():
            pos += 1
            continue
        start = pos
        while pos < length and not text[pos].isspace():
            pos += 1
        lo, hi = start, pos
        while lo < hi and text[lo] in _STRIP_CHARS:
            lo += 1
        while hi > lo and text[hi - 1] in _STRIP_CHARS:
            hi -= 1
        if hi > lo:
            tokens.append(Token(text[lo:hi], lo, hi))
    return tokens


def token_texts(text: str) -> list[str]:
    return [t.text for t in tokenize(text)]


@dataclass(frozen=True)
class Lexicon:
    """Lowercased term -> positive weight."""

    entries: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for term, weight in self.entries.items():
            if not term or term != term.lower():
                raise ValueError(f"lexicon term {term!r} must be non-empty lowercase")
            if not (isinstance(weight, (int, float)) and math.isfinite(weight) and weight > 0):
                raise ValueError(f"lexicon weight for {term!r} must be finite and > 0, got {weight}")

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def weight(self, term: str) -> float:
        return self.entries[term]


def parse_lexicon(text: str) -> Lexicon:
    entries: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise FormatError(f"lexicon line {lineno}: expected 'term<TAB>weight', got {raw!r}")
        term, weight_text = line.split("\t", 1)
        term = term.strip().lower()
        try:
            weight = float(weight_text.strip())
        except ValueError as exc:
            raise FormatError(f"lexicon line {lineno}: bad weight {weight_text.strip()!r}") from exc
        if not term:
            raise FormatError(f"lexicon line {lineno}: empty term")
        if not (math.isfinite(weight) and weight > 0):
            raise FormatError(f"lexicon line {lineno}: weight must be finite and > 0, got {weight}")
        if term in entries:
            raise FormatError(f"lexicon line {lineno}: duplicate term {term!r}")
        entries[term] = weight
    return Lexicon(entries)


def load_lexicon(path) -> Lexicon:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_lexicon(fh.read())


def extract_keywords(text: str, lexicon: Lexicon, top_k: int = 5) -> list[str]:
    """Lexicon hits ranked by weight (ties keep question order), truncated to top_k.

    Returned keywords are lowercase and deduplicated.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    seen: dict[str, float] = {}
    for tok in tokenize(text):
        low = tok.text.lower()
        if low in lexicon and low not in seen:
            seen[low] = lexicon.weight(low)
    # Python's sort is stable, so equal weights keep first-occurrence order.
    ranked = sorted(seen, key=lambda term: -seen[term])
    return ranked[:top_k]


def derive_background_text(text: str, keywords) -> str:
    """Remove every occurrence of each keyword (case-insensitive), rejoin with spaces."""
    drop = {k.lower() for k in keywords}
    return " ".join(t.text for t in tokenize(text) if t.text.lower() not in drop)


class KeywordExtractor(Protocol):
    def extract(self, text: str) -> list[str]: ...


@dataclass(frozen=True)
class LexiconKeywordExtractor:
    lexicon: Lexicon
    top_k: int = 5

    def extract(self, text: str) -> list[str]:
        return extract_keywords(text, self.lexicon, self.top_k)

    def describe(self) -> str:
        return f"lexicon({len(self.lexicon.entries)} terms, top_k={self.top_k})"


@dataclass(frozen=True)
class StaticKeywordExtractor:
    """Pass-through extractor for keywords supplied directly (e.g. on the CLI)."""

    keywords: tuple[str, ...]

    def extract(self, text: str) -> list[str]:
        out = []
        for kw in self.keywords:
            low = kw.strip().lower()
            if low and low not in out:
                out.append(low)
        return out

    def describe(self) -> str:
        return f"static({','.join(self.keywords)})"
