"""Tokenization, string normalization, and the pluggable lemmatizer.

All text entering the model (utterances, question elements, annotated
values) goes through the same tokenizer so that token-level comparisons
(span search, exact-match features) are consistent on both sides.
"""
from __future__ import annotations

import re
from typing import Protocol

# Clock times like "08:15" stay single tokens so span labels for time
# slots are short; contractions keep their apostrophe ("don't").
_TOKEN_RE = re.compile(r"\d{1,2}:\d{2}|[a-z0-9]+(?:'[a-z0-9]+)*|[^\sa-z0-9]")

_WS_RE = re.compile(r"\s+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace and punctuation.

    Punctuation marks become single-character tokens; clock times are
    kept whole.
    """
    return _TOKEN_RE.findall(text.casefold())


def normalize_value(value: str) -> str:
    """Casefold and collapse internal whitespace; used wherever value
    strings are compared (relationships, exact match, metrics)."""
    return _WS_RE.sub(" ", value.casefold().strip())


class Lemmatizer(Protocol):
    def lemma(self, token: str) -> str: ...


class RuleLemmatizer:
    """Deterministic rule-based suffix stripper with an exceptions table.

    Linguistic fidelity is secondary; the only requirement is that values
    and context tokens are reduced identically so lemma-level matches fire.
    """

    #: irregular or otherwise rule-breaking forms
    EXCEPTIONS = {
        "children": "child",
        "people": "person",
        "men": "man",
        "women": "woman",
        "feet": "foot",
        "priced": "price",
        "pricing": "price",
        "leaves": "leave",
        "left": "leave",
        "centre": "center",
        "theatre": "theater",
    }

    #: (suffix, replacement) tried in order; first match wins
    RULES = (
        ("'s", ""),
        ("ies", "y"),
        ("ied", "y"),
        ("sses", "ss"),
        ("ches", "ch"),
        ("shes", "sh"),
        ("xes", "x"),
        ("ly", ""),
        ("ing", ""),
        ("ed", ""),
        ("s", ""),
    )

    def lemma(self, token: str) -> str:
        if token in self.EXCEPTIONS:
            return self.EXCEPTIONS[token]
        for suffix, repl in self.RULES:
            stem = token[: len(token) - len(suffix)] + repl
            if token.endswith(suffix) and len(stem) >= 3:
                return stem
        return token


DEFAULT_LEMMATIZER = RuleLemmatizer()


def lemmatize_tokens(tokens: list[str], lemmatizer: Lemmatizer | None = None) -> list[str]:
    lem = lemmatizer or DEFAULT_LEMMATIZER
    return [lem.lemma(t) for t in tokens]
