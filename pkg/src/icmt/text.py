"""Tokenization and word counting shared by retrieval, budgets, and metrics.

Two schemes are supported: plain Unicode-whitespace splitting (the unit used
for selection budgets and coverage) and the mteval-v13a scheme used by the
BLEU scorer. The 13a implementation mirrors the reference tokenizer used by
WMT evaluation and is pinned by committed fixtures.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class TokenScheme(Enum):
    WHITESPACE = "whitespace"
    MTEVAL_13A = "13a"


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    scheme: TokenScheme

    def __post_init__(self) -> None:
        if any(not t for t in self.tokens):
            raise ValueError("token sequences must not contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def tokenize_whitespace(text: str) -> TokenSequence:
    """Split on runs of Unicode whitespace. Empty input yields an empty sequence."""
    return TokenSequence(tuple(text.split()), TokenScheme.WHITESPACE)


def word_count(text: str) -> int:
    """Number of whitespace-delimited words in ``text``."""
    return len(text.split())


# mteval-v13a, language-independent normalization followed by the
# Western-language punctuation splits. Order of the substitutions matters.
_13A_PUNCT = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_COMMA_BEFORE = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_COMMA_AFTER = re.compile(r"([\.,])([^0-9])")
_13A_DIGIT_DASH = re.compile(r"([0-9])(-)")
_13A_SPACES = re.compile(r"\s+")


def _normalize_13a(line: str) -> str:
    norm = line
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")

    norm = f" {norm} "
    norm = _13A_PUNCT.sub(r" \1 ", norm)
    # period and comma stay attached only between digits
    norm = _13A_PERIOD_COMMA_BEFORE.sub(r"\1 \2 ", norm)
    norm = _13A_PERIOD_COMMA_AFTER.sub(r" \1 \2", norm)
    norm = _13A_DIGIT_DASH.sub(r"\1 \2 ", norm)
    norm = _13A_SPACES.sub(" ", norm)
    return norm.strip()


def tokenize_13a(text: str) -> TokenSequence:
    """Tokenize with the mteval-v13a scheme (the BLEU scorer's tokenizer)."""
    return TokenSequence(tuple(_normalize_13a(text).split()), TokenScheme.MTEVAL_13A)
