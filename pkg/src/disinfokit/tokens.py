"""Shared word tokenization and whole-word term matching.

Every module that looks at tweet text (trend queries, corpus filters,
itemset transactions, vocabulary building) goes through the same
tokenizer so that "word" means exactly one thing across the toolkit:
a maximal run of Unicode alphanumeric characters, lowercased.
Punctuation (including '#' and '@') never reaches a token, so hashtags
match as ordinary words.
"""

from __future__ import annotations

import re

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase `text` and return its alphanumeric runs, in order.

    Underscore is treated as punctuation, not as a word character.
    """
    return _WORD_RE.findall(text.lower())


def contains_terms(text: str, terms) -> bool:
    """True iff every term occurs in `text` as a case-insensitive whole word.

    Conjunction semantics: an empty match on any single term fails the
    whole set. Terms are lowercased before comparison; a term that is
    itself not a single word (e.g. "ukraine nazi") never matches.
    """
    words = set(tokenize(text))
    return all(term.lower() in words for term in terms)
